#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>

#include "anomforge/ontology.hpp"
#include "anomforge/providers.hpp"

namespace anomforge {

struct MockSettings {
  std::uint64_t seed = 7;
  std::size_t dim = 64;
  // Visual noise: image embeddings become normalize(signal + epsilon * unit noise).
  double epsilon = 0.0;
  // Object class vectors are pulled toward their broad category's vector by
  // this weight, so category-level matching has a ground truth.
  double category_weight = 0.75;
};

// Shared vector space behind the mock embedding, inpainting and region
// providers.
//
// Every key (an ontology label, a scene name, any other text segment) owns a
// 24-bit colour and a seeded pseudo-random unit vector. The mock inpainter
// paints a target with its colour; the mock embedder maps each pixel colour
// back to the key vector and sums over pixels. Text embeddings sum the key
// vectors of their lines, where a line may be the bare label, "label:
// description", or the description alone.
class MockSemanticSpace {
 public:
  MockSemanticSpace(const Ontology& ontology, MockSettings settings);

  const MockSettings& settings() const { return settings_; }
  std::size_t dim() const { return settings_.dim; }

  Rgb color_for(std::string_view key) const;
  // Known ontology objects get their category-mixed vector.
  std::vector<double> key_vector(std::string_view key) const;
  std::vector<double> color_vector(Rgb color) const;

  std::vector<double> text_vector(std::string_view text) const;
  std::vector<double> image_vector(const RasterImage& image) const;

  // Resolves one line of text to the key it names.
  std::string resolve_segment(std::string_view segment) const;

 private:
  std::vector<double> raw_vector(std::uint32_t color) const;

  MockSettings settings_;
  std::map<std::string, std::string, std::less<>> object_category_;
  std::unordered_map<std::string, std::string> segment_to_key_;
  std::unordered_map<std::uint32_t, std::string> color_to_key_;
  std::map<std::string, std::vector<double>, std::less<>> taboo_vectors_;
};

class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::shared_ptr<const MockSemanticSpace> space)
      : space_(std::move(space)) {}

  std::size_t dim() const override { return space_->dim(); }

 protected:
  std::vector<double> raw_embed_image(const RasterImage& image) const override;
  std::vector<double> raw_embed_text(std::string_view text) const override;

 private:
  std::shared_ptr<const MockSemanticSpace> space_;
};

// Fills the mask with the colour of the object named in the prompt. With a
// nonzero artifact rate, a seeded subset of candidates gets a taboo colour in
// the lower half of the mask.
class MockInpaintingProvider final : public InpaintingProvider {
 public:
  MockInpaintingProvider(std::shared_ptr<const MockSemanticSpace> space, const Ontology& ontology,
                         double artifact_rate = 0.0);

  // The longest object label found as a word run in the prompt, or the whole
  // trimmed prompt when none matches.
  std::string label_from_prompt(std::string_view prompt) const;

 protected:
  std::vector<RasterImage> raw_inpaint(const RasterImage& image, const Rect& mask,
                                       std::string_view prompt, int n,
                                       std::uint64_t seed) const override;

 private:
  std::shared_ptr<const MockSemanticSpace> space_;
  std::vector<std::string> labels_;
  std::vector<std::string> taboo_;
  double artifact_rate_;
};

using RegionAnnotations = std::map<std::string, std::vector<Region>, std::less<>>;

// {"<image_id>": [{"x":..,"y":..,"w":..,"h":..,"confidence":..}, ...]}
RegionAnnotations load_region_annotations(const std::filesystem::path& path);
RegionAnnotations region_annotations_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RegionAnnotations& annotations);

// Returns the annotated boxes for QueryContext::image_id, unmerged.
class MockRegionProvider final : public RegionProvider {
 public:
  explicit MockRegionProvider(RegionAnnotations annotations) : annotations_(std::move(annotations)) {}

 protected:
  std::vector<Region> raw_propose_regions(const RasterImage& image,
                                          const QueryContext& ctx) const override;

 private:
  RegionAnnotations annotations_;
};

class EchoTruthVqaProvider final : public VqaProvider {
 protected:
  std::string raw_answer(const RasterImage& image, std::string_view prompt,
                         const QueryContext& ctx) const override;
};

class FixedAnswerVqaProvider final : public VqaProvider {
 public:
  explicit FixedAnswerVqaProvider(std::string answer) : answer_(std::move(answer)) {}

 protected:
  std::string raw_answer(const RasterImage& image, std::string_view prompt,
                         const QueryContext& ctx) const override;

 private:
  std::string answer_;
};

// Known labels map to their ontology description; anything else is echoed.
class MockDescriptionProvider final : public DescriptionProvider {
 public:
  explicit MockDescriptionProvider(std::shared_ptr<const Ontology> ontology)
      : ontology_(std::move(ontology)) {}

 protected:
  std::string raw_describe(std::string_view text) const override;

 private:
  std::shared_ptr<const Ontology> ontology_;
};

}  // namespace anomforge
