#include "anomforge/providers.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "anomforge/error.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

nlohmann::json to_json(const Region& region) {
  auto doc = to_json(region.bbox);
  doc["confidence"] = region.confidence;
  return doc;
}

Region region_from_json(const nlohmann::json& doc) {
  Region region{rect_from_json(doc), doc.value("confidence", 1.0)};
  if (region.bbox.width <= 0 || region.bbox.height <= 0)
    throw validation_error(fmt::format("region ({},{},{},{}) has zero area", region.bbox.x,
                                       region.bbox.y, region.bbox.width, region.bbox.height));
  if (!(region.confidence >= 0.0 && region.confidence <= 1.0))
    throw validation_error(fmt::format("region confidence {} outside [0,1]", region.confidence));
  return region;
}

EmbeddingVector EmbeddingProvider::finish(std::vector<double> raw) const {
  if (raw.size() != dim())
    throw provider_error(
        fmt::format("embedding provider returned dim {}, declared {}", raw.size(), dim()));
  try {
    return EmbeddingVector::normalized(std::move(raw));
  } catch (const Error& e) {
    throw provider_error(fmt::format("embedding provider returned an invalid vector: {}", e.what()));
  }
}

EmbeddingVector EmbeddingProvider::embed_image(const RasterImage& image) const {
  if (image.empty()) throw validation_error("embed_image: image is empty");
  return finish(raw_embed_image(image));
}

EmbeddingVector EmbeddingProvider::embed_text(std::string_view text) const {
  if (trim(text).empty()) throw validation_error("embed_text: text is empty");
  return finish(raw_embed_text(text));
}

std::vector<RasterImage> InpaintingProvider::inpaint(const RasterImage& image, const Rect& mask,
                                                     std::string_view prompt, int n,
                                                     std::uint64_t seed) const {
  if (image.empty()) throw validation_error("inpaint: image is empty");
  if (mask.empty() || !image.bounds().contains(mask))
    throw validation_error(fmt::format("inpaint: mask ({},{},{},{}) outside {}x{} image", mask.x,
                                       mask.y, mask.width, mask.height, image.width(), image.height()));
  if (n < 1) throw validation_error("inpaint: n must be >= 1");
  if (trim(prompt).empty()) throw validation_error("inpaint: prompt is empty");

  auto out = raw_inpaint(image, mask, prompt, n, seed);
  if (out.size() != static_cast<std::size_t>(n))
    throw provider_error(fmt::format("inpaint: provider returned {} images, requested {}", out.size(), n));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].width() != image.width() || out[i].height() != image.height())
      throw provider_error(fmt::format("inpaint: candidate {} is {}x{}, expected {}x{}", i,
                                       out[i].width(), out[i].height(), image.width(), image.height()));
  }
  return out;
}

std::vector<Region> RegionProvider::propose_regions(const RasterImage& image,
                                                    const QueryContext& ctx) const {
  if (image.empty()) throw validation_error("propose_regions: image is empty");
  auto regions = raw_propose_regions(image, ctx);
  if (regions.empty()) throw provider_error("propose_regions: provider returned zero regions");
  for (const auto& r : regions) {
    if (r.bbox.empty() || !image.bounds().contains(r.bbox))
      throw provider_error(fmt::format("propose_regions: region ({},{},{},{}) outside {}x{} image",
                                       r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height, image.width(),
                                       image.height()));
  }
  std::stable_sort(regions.begin(), regions.end(),
                   [](const Region& a, const Region& b) { return a.confidence > b.confidence; });
  return regions;
}

std::string VqaProvider::answer(const RasterImage& image, std::string_view prompt,
                                const QueryContext& ctx) const {
  if (trim(prompt).empty()) throw validation_error("vqa: prompt is empty");
  auto text = raw_answer(image, prompt, ctx);
  if (trim(text).empty()) throw provider_error("vqa: provider returned an empty response");
  return text;
}

std::string DescriptionProvider::describe(std::string_view text) const {
  if (trim(text).empty()) throw validation_error("describe: text is empty");
  auto out = raw_describe(text);
  if (trim(out).empty()) throw provider_error("describe: provider returned an empty description");
  return out;
}

}  // namespace anomforge
