#include "anomforge/mock_providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "anomforge/error.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

namespace {

std::uint32_t pack(Rgb c) {
  return (static_cast<std::uint32_t>(c.r) << 16) | (static_cast<std::uint32_t>(c.g) << 8) | c.b;
}

void normalize_in_place(std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double n = std::sqrt(sum);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

}  // namespace

MockSemanticSpace::MockSemanticSpace(const Ontology& ontology, MockSettings settings)
    : settings_(settings) {
  if (settings_.dim == 0) throw validation_error("mock: dim must be positive");
  if (!(settings_.epsilon >= 0.0)) throw validation_error("mock: epsilon must be >= 0");
  if (!(settings_.category_weight >= 0.0)) throw validation_error("mock: category_weight must be >= 0");

  const auto add_segment = [&](const std::string& segment, const std::string& key) {
    auto [it, inserted] = segment_to_key_.emplace(segment, key);
    if (!inserted && it->second != key)
      throw validation_error(
          fmt::format("mock: text '{}' is ambiguous between '{}' and '{}'", segment, it->second, key));
  };
  const auto add_key = [&](const std::string& key, const std::string& description) {
    const auto color = pack(color_for(key));
    auto [it, inserted] = color_to_key_.emplace(color, key);
    if (!inserted && it->second != key)
      throw validation_error(fmt::format("mock: colour collision between '{}' and '{}'", key, it->second));
    add_segment(key, key);
    if (!description.empty()) {
      add_segment(description, key);
      add_segment(fmt::format("{}: {}", key, description), key);
    }
  };

  for (const auto& obj : ontology.objects()) {
    object_category_.emplace(obj.label, obj.broad_category);
    add_key(obj.label, obj.description);
  }
  for (const auto& t : ontology.taboo()) add_key(t.label, t.description);
  for (const auto& c : ontology.broad_categories()) add_key(c.label, c.description);
  for (const auto& s : ontology.scenes()) add_key(s.name, "");

  // Taboo directions are drawn from the orthogonal complement of the object
  // and category vectors, so a clean render never correlates with an artifact
  // label. Without room in the space the plain key vector is kept.
  std::vector<std::vector<double>> basis;
  const auto orthogonalize = [&](std::vector<double> v) {
    for (const auto& q : basis) {
      double proj = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] * q[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * q[i];
    }
    return v;
  };
  const auto push_basis = [&](std::vector<double> v) {
    v = orthogonalize(std::move(v));
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 < 1e-12) return false;
    normalize_in_place(v);
    basis.push_back(std::move(v));
    return true;
  };
  for (const auto& c : ontology.broad_categories()) push_basis(key_vector(c.label));
  for (const auto& obj : ontology.objects()) push_basis(key_vector(obj.label));
  if (basis.size() + ontology.taboo().size() <= settings_.dim) {
    for (const auto& t : ontology.taboo()) {
      if (!push_basis(key_vector(t.label))) break;
      taboo_vectors_.emplace(t.label, basis.back());
    }
  }
}

Rgb MockSemanticSpace::color_for(std::string_view key) const {
  const auto h = fnv1a64(key);
  return {static_cast<std::uint8_t>(h >> 16), static_cast<std::uint8_t>(h >> 8),
          static_cast<std::uint8_t>(h)};
}

std::vector<double> MockSemanticSpace::raw_vector(std::uint32_t color) const {
  std::mt19937_64 rng(mix_seed(settings_.seed, color));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(settings_.dim);
  for (double& x : v) x = normal(rng);
  normalize_in_place(v);
  return v;
}

std::vector<double> MockSemanticSpace::key_vector(std::string_view key) const {
  if (auto it = taboo_vectors_.find(key); it != taboo_vectors_.end()) return it->second;
  auto v = raw_vector(pack(color_for(key)));
  if (auto it = object_category_.find(key); it != object_category_.end()) {
    const auto category = raw_vector(pack(color_for(it->second)));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += settings_.category_weight * category[i];
    normalize_in_place(v);
  }
  return v;
}

std::vector<double> MockSemanticSpace::color_vector(Rgb color) const {
  if (auto it = color_to_key_.find(pack(color)); it != color_to_key_.end()) return key_vector(it->second);
  return raw_vector(pack(color));
}

std::string MockSemanticSpace::resolve_segment(std::string_view segment) const {
  const auto trimmed = std::string(trim(segment));
  if (auto it = segment_to_key_.find(trimmed); it != segment_to_key_.end()) return it->second;
  return trimmed;
}

std::vector<double> MockSemanticSpace::text_vector(std::string_view text) const {
  std::vector<double> sum(settings_.dim, 0.0);
  for (const auto& line : split_lines(text)) {
    if (trim(line).empty()) continue;
    const auto v = key_vector(resolve_segment(line));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  return sum;
}

std::vector<double> MockSemanticSpace::image_vector(const RasterImage& image) const {
  std::map<std::uint32_t, std::size_t> counts;
  const auto px = image.pixels();
  // Runs of one colour are counted together; fills and checkerboards are long runs.
  std::uint32_t run_color = 0;
  std::size_t run = 0;
  for (std::size_t i = 0; i + 2 < px.size(); i += 3) {
    const auto c = pack({px[i], px[i + 1], px[i + 2]});
    if (run > 0 && c != run_color) {
      counts[run_color] += run;
      run = 0;
    }
    run_color = c;
    ++run;
  }
  if (run > 0) counts[run_color] += run;

  const auto total = static_cast<double>(px.size() / 3);
  std::vector<double> sum(settings_.dim, 0.0);
  for (const auto& [color, count] : counts) {
    const auto v = color_vector({static_cast<std::uint8_t>(color >> 16),
                                 static_cast<std::uint8_t>(color >> 8), static_cast<std::uint8_t>(color)});
    const double weight = static_cast<double>(count) / total;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += weight * v[i];
  }
  if (settings_.epsilon > 0.0) {
    normalize_in_place(sum);
    const std::string_view bytes(reinterpret_cast<const char*>(px.data()), px.size());
    const auto content = mix_seed(fnv1a64(bytes), (static_cast<std::uint64_t>(image.width()) << 32) |
                                                       static_cast<std::uint32_t>(image.height()));
    std::mt19937_64 rng(mix_seed(settings_.seed ^ 0x6e6f697365ULL, content));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(settings_.dim);
    for (double& x : noise) x = normal(rng);
    normalize_in_place(noise);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += settings_.epsilon * noise[i];
  }
  return sum;
}

std::vector<double> MockEmbeddingProvider::raw_embed_image(const RasterImage& image) const {
  return space_->image_vector(image);
}

std::vector<double> MockEmbeddingProvider::raw_embed_text(std::string_view text) const {
  return space_->text_vector(text);
}

MockInpaintingProvider::MockInpaintingProvider(std::shared_ptr<const MockSemanticSpace> space,
                                               const Ontology& ontology, double artifact_rate)
    : space_(std::move(space)),
      labels_(ontology.object_labels()),
      taboo_(ontology.taboo_labels()),
      artifact_rate_(artifact_rate) {
  if (!(artifact_rate_ >= 0.0 && artifact_rate_ <= 1.0))
    throw validation_error("mock inpainter: artifact_rate must be in [0,1]");
}

std::string MockInpaintingProvider::label_from_prompt(std::string_view prompt) const {
  const auto tokens = tokenize(prompt);
  const std::string* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& label : labels_) {
    const auto label_tokens = tokenize(label);
    if (!contains_token_run(tokens, label_tokens)) continue;
    if (label_tokens.size() > best_len || (label_tokens.size() == best_len && label < *best)) {
      best = &label;
      best_len = label_tokens.size();
    }
  }
  return best ? *best : std::string(trim(prompt));
}

std::vector<RasterImage> MockInpaintingProvider::raw_inpaint(const RasterImage& image, const Rect& mask,
                                                             std::string_view prompt, int n,
                                                             std::uint64_t seed) const {
  const auto color = space_->color_for(label_from_prompt(prompt));
  std::vector<RasterImage> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    RasterImage candidate = image;
    candidate.fill(mask, color);
    if (artifact_rate_ > 0.0 && !taboo_.empty() && mask.height >= 2) {
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng) < artifact_rate_) {
        const auto& taboo = taboo_[static_cast<std::size_t>(rng() % taboo_.size())];
        const int half = mask.height / 2;
        candidate.fill({mask.x, mask.y + half, mask.width, mask.height - half}, space_->color_for(taboo));
      }
    }
    out.push_back(std::move(candidate));
  }
  return out;
}

RegionAnnotations region_annotations_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw parse_error("region annotations must be a JSON object keyed by image id");
  RegionAnnotations out;
  for (const auto& [image_id, boxes] : doc.items()) {
    std::vector<Region> regions;
    for (const auto& box : boxes) {
      try {
        regions.push_back(region_from_json(box));
      } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("region annotations for '{}': {}", image_id, e.what()));
      }
    }
    out.emplace(image_id, std::move(regions));
  }
  return out;
}

RegionAnnotations load_region_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open region annotations '{}'", path.string()));
  try {
    return region_annotations_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(fmt::format("region annotations '{}': {}", path.string(), e.what()));
  }
}

nlohmann::json to_json(const RegionAnnotations& annotations) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [image_id, regions] : annotations) {
    auto& arr = doc[image_id] = nlohmann::json::array();
    for (const auto& r : regions) arr.push_back(to_json(r));
  }
  return doc;
}

std::vector<Region> MockRegionProvider::raw_propose_regions(const RasterImage&,
                                                            const QueryContext& ctx) const {
  auto it = annotations_.find(ctx.image_id);
  if (it == annotations_.end())
    throw provider_error(fmt::format("mock regions: no annotation for image '{}'", ctx.image_id));
  return it->second;
}

std::string EchoTruthVqaProvider::raw_answer(const RasterImage&, std::string_view,
                                             const QueryContext& ctx) const {
  return ctx.truth_label;
}

std::string FixedAnswerVqaProvider::raw_answer(const RasterImage&, std::string_view,
                                               const QueryContext&) const {
  return answer_;
}

std::string MockDescriptionProvider::raw_describe(std::string_view text) const {
  const auto key = trim(text);
  if (ontology_->find_object(key) || ontology_->find_taboo(key) || ontology_->find_category(key))
    return description_of(*ontology_, key);
  return std::string(text);
}

}  // namespace anomforge
