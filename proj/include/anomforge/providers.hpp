#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "anomforge/embedding.hpp"
#include "anomforge/image.hpp"

namespace anomforge {

struct Region {
  Rect bbox;
  double confidence = 1.0;
  bool operator==(const Region&) const = default;
};

nlohmann::json to_json(const Region& region);
Region region_from_json(const nlohmann::json& doc);

// Side-channel hints for mock providers. Remote adapters never send these.
struct QueryContext {
  std::string image_id;
  std::string truth_label;
};

// The provider interfaces use a non-virtual public entry point that checks
// the pre/postconditions around the implementation hook. Implementations must
// tolerate concurrent calls.

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;

  EmbeddingVector embed_image(const RasterImage& image) const;
  EmbeddingVector embed_text(std::string_view text) const;

 protected:
  virtual std::vector<double> raw_embed_image(const RasterImage& image) const = 0;
  virtual std::vector<double> raw_embed_text(std::string_view text) const = 0;

 private:
  EmbeddingVector finish(std::vector<double> raw) const;
};

class InpaintingProvider {
 public:
  virtual ~InpaintingProvider() = default;

  // Returns exactly n images, each the size of `image`.
  std::vector<RasterImage> inpaint(const RasterImage& image, const Rect& mask, std::string_view prompt,
                                   int n, std::uint64_t seed) const;

 protected:
  virtual std::vector<RasterImage> raw_inpaint(const RasterImage& image, const Rect& mask,
                                               std::string_view prompt, int n,
                                               std::uint64_t seed) const = 0;
};

class RegionProvider {
 public:
  virtual ~RegionProvider() = default;

  // At least one region, sorted by descending confidence.
  std::vector<Region> propose_regions(const RasterImage& image, const QueryContext& ctx = {}) const;

 protected:
  virtual std::vector<Region> raw_propose_regions(const RasterImage& image,
                                                  const QueryContext& ctx) const = 0;
};

class VqaProvider {
 public:
  virtual ~VqaProvider() = default;

  std::string answer(const RasterImage& image, std::string_view prompt,
                     const QueryContext& ctx = {}) const;

 protected:
  virtual std::string raw_answer(const RasterImage& image, std::string_view prompt,
                                 const QueryContext& ctx) const = 0;
};

class DescriptionProvider {
 public:
  virtual ~DescriptionProvider() = default;

  std::string describe(std::string_view text) const;

 protected:
  virtual std::string raw_describe(std::string_view text) const = 0;
};

}  // namespace anomforge
