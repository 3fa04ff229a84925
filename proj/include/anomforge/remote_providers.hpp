#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "anomforge/providers.hpp"

namespace anomforge {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

// Accepts http://host[:port][/path]. The path defaults to "/".
Endpoint parse_endpoint(std::string_view url);

// Appends raw request and response bodies, exactly as sent and received.
class TraceLog {
 public:
  explicit TraceLog(const std::filesystem::path& path);

  void record(std::string_view direction, std::string_view url, std::string_view body);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

// JSON-over-HTTP POST. One client per call, so instances are safe to share.
class HttpJsonTransport {
 public:
  explicit HttpJsonTransport(std::string url, std::shared_ptr<TraceLog> trace = nullptr,
                             std::chrono::seconds timeout = std::chrono::seconds(300));

  nlohmann::json post(const nlohmann::json& request) const;
  const std::string& url() const { return url_; }

 private:
  std::string url_;
  Endpoint endpoint_;
  std::shared_ptr<TraceLog> trace_;
  std::chrono::seconds timeout_;
};

std::string encode_image_payload(const RasterImage& image);
RasterImage decode_image_payload(std::string_view payload);

// request {kind: "image"|"text", payload}, response {dim, values}
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(HttpJsonTransport transport, std::size_t dim)
      : transport_(std::move(transport)), dim_(dim) {}

  std::size_t dim() const override { return dim_; }

 protected:
  std::vector<double> raw_embed_image(const RasterImage& image) const override;
  std::vector<double> raw_embed_text(std::string_view text) const override;

 private:
  std::vector<double> request(std::string_view kind, std::string payload) const;

  HttpJsonTransport transport_;
  std::size_t dim_;
};

// request {image, mask: {x, y, w, h}, prompt, n, seed}, response {images: [...]}
class RemoteInpaintingProvider final : public InpaintingProvider {
 public:
  explicit RemoteInpaintingProvider(HttpJsonTransport transport) : transport_(std::move(transport)) {}

 protected:
  std::vector<RasterImage> raw_inpaint(const RasterImage& image, const Rect& mask,
                                       std::string_view prompt, int n,
                                       std::uint64_t seed) const override;

 private:
  HttpJsonTransport transport_;
};

// request {image}, response {regions: [{x, y, w, h, confidence}]}
class RemoteRegionProvider final : public RegionProvider {
 public:
  explicit RemoteRegionProvider(HttpJsonTransport transport) : transport_(std::move(transport)) {}

 protected:
  std::vector<Region> raw_propose_regions(const RasterImage& image,
                                          const QueryContext& ctx) const override;

 private:
  HttpJsonTransport transport_;
};

// request {image, prompt}, response {answer}
class RemoteVqaProvider final : public VqaProvider {
 public:
  explicit RemoteVqaProvider(HttpJsonTransport transport) : transport_(std::move(transport)) {}

 protected:
  std::string raw_answer(const RasterImage& image, std::string_view prompt,
                         const QueryContext& ctx) const override;

 private:
  HttpJsonTransport transport_;
};

// request {text}, response {description}
class RemoteDescriptionProvider final : public DescriptionProvider {
 public:
  explicit RemoteDescriptionProvider(HttpJsonTransport transport) : transport_(std::move(transport)) {}

 protected:
  std::string raw_describe(std::string_view text) const override;

 private:
  HttpJsonTransport transport_;
};

}  // namespace anomforge
