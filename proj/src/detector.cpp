#include "anomforge/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

std::string_view to_string(FunctionSet set) {
  switch (set) {
    case FunctionSet::All: return "all";
    case FunctionSet::Visual: return "visual";
    case FunctionSet::Knowledge: return "knowledge";
  }
  return "all";
}

FunctionSet parse_function_set(std::string_view text) {
  if (text == "all") return FunctionSet::All;
  if (text == "visual") return FunctionSet::Visual;
  if (text == "knowledge") return FunctionSet::Knowledge;
  throw validation_error(fmt::format("function set must be all|visual|knowledge, got '{}'", text));
}

std::vector<double> irv_scores(const EmbeddingVector& image_emb, std::span<const EmbeddingVector> region_embs) {
  if (region_embs.empty()) throw validation_error("irv: no regions");
  std::vector<double> out;
  out.reserve(region_embs.size());
  for (const auto& r : region_embs) out.push_back(dot(image_emb, r));
  return out;
}

namespace {

std::vector<double> mean_self_similarity(std::span<const EmbeddingVector> embs) {
  std::vector<double> out(embs.size(), 0.0);
  for (std::size_t j = 0; j < embs.size(); ++j) {
    double sum = 0.0;
    for (const auto& e : embs) sum += dot(embs[j], e);
    out[j] = sum / static_cast<double>(embs.size());
  }
  return out;
}

}  // namespace

std::vector<double> rrv_scores(std::span<const EmbeddingVector> region_embs) {
  if (region_embs.empty()) throw validation_error("rrv: no regions");
  return mean_self_similarity(region_embs);
}

KnowledgeBase knowledge_base_from(const Ontology& ontology) {
  KnowledgeBase kb;
  for (const auto& o : ontology.objects()) kb.emplace(o.label, o.description);
  return kb;
}

std::string retrieve_descriptions(const EmbeddingVector& region_emb, const LabelEmbeddings& class_embs,
                                  const KnowledgeBase& kb, int k_kb) {
  if (k_kb < 1) throw validation_error("kb: k_kb must be >= 1");
  if (class_embs.empty()) throw validation_error("kb: empty class set");
  std::map<std::string, double, std::less<>> similarity;
  for (const auto& [label, emb] : class_embs) similarity.emplace(label, dot(region_emb, emb));
  const auto ranked = ranked_labels(similarity);
  const auto take = std::min(ranked.size(), static_cast<std::size_t>(k_kb));
  std::string text;
  for (std::size_t i = 0; i < take; ++i) {
    auto it = kb.find(ranked[i]);
    if (it == kb.end()) throw validation_error(fmt::format("kb: no description for class '{}'", ranked[i]));
    if (i > 0) text += '\n';
    text += it->second;
  }
  return text;
}

std::vector<double> kb_scores(std::span<const EmbeddingVector> region_embs, const LabelEmbeddings& class_embs,
                              const KnowledgeBase& kb, int k_kb, const TextEmbedder& embed_text) {
  if (region_embs.empty()) throw validation_error("kb: no regions");
  std::vector<EmbeddingVector> description_embs;
  description_embs.reserve(region_embs.size());
  for (const auto& r : region_embs) description_embs.push_back(embed_text(retrieve_descriptions(r, class_embs, kb, k_kb)));
  return mean_self_similarity(description_embs);
}

namespace {

std::vector<double> standardized(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(values.size(), 0.0);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

}  // namespace

std::vector<double> combine(const FunctionScores& scores, FunctionSet set) {
  std::vector<const std::vector<double>*> selected;
  const auto need = [&](const std::optional<std::vector<double>>& s, std::string_view name) {
    if (!s) throw validation_error(fmt::format("combine: function set '{}' needs {} scores", to_string(set), name));
    selected.push_back(&*s);
  };
  if (set == FunctionSet::All || set == FunctionSet::Visual) {
    need(scores.irv, "irv");
    need(scores.rrv, "rrv");
  }
  if (set == FunctionSet::All || set == FunctionSet::Knowledge) need(scores.kb, "kb");

  const auto n = selected.front()->size();
  for (const auto* s : selected)
    if (s->size() != n) throw validation_error("combine: score lists have different lengths");
  if (n == 0) throw validation_error("combine: no regions");

  std::vector<double> out(n, 0.0);
  for (const auto* s : selected) {
    const auto z = standardized(*s);
    for (std::size_t i = 0; i < n; ++i) out[i] += z[i];
  }
  for (double& v : out) v /= static_cast<double>(selected.size());
  return out;
}

std::string classify_region(const EmbeddingVector& region_emb, const LabelEmbeddings& class_embs) {
  if (class_embs.empty()) throw validation_error("classify: empty class set");
  const std::string* best = nullptr;
  double best_score = 0.0;
  for (const auto& [label, emb] : class_embs) {
    const double s = dot(region_emb, emb);
    if (!best || s > best_score) {
      best = &label;
      best_score = s;
    }
  }
  return *best;
}

nlohmann::json to_json(const DetectionResult& result) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& r : result.ranked) {
    nlohmann::json entry = {{"region", to_json(r.region)}, {"label", r.label}, {"score", r.combined}};
    if (r.irv) entry["irv"] = *r.irv;
    if (r.rrv) entry["rrv"] = *r.rrv;
    if (r.kb) entry["kb"] = *r.kb;
    ranked.push_back(std::move(entry));
  }
  return {{"function_set", to_string(result.function_set)}, {"ranked", ranked}};
}

DetectionResult detection_from_json(const nlohmann::json& doc) {
  try {
    DetectionResult out;
    out.function_set = parse_function_set(doc.at("function_set").get<std::string>());
    for (const auto& e : doc.at("ranked")) {
      RankedRegion r;
      r.region = region_from_json(e.at("region"));
      r.label = e.at("label").get<std::string>();
      r.combined = e.at("score").get<double>();
      if (e.contains("irv")) r.irv = e.at("irv").get<double>();
      if (e.contains("rrv")) r.rrv = e.at("rrv").get<double>();
      if (e.contains("kb")) r.kb = e.at("kb").get<double>();
      out.ranked.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(fmt::format("detection result: {}", e.what()));
  }
}

Detector::Detector(const EmbeddingProvider& embed, const RegionProvider& regions, const Ontology& ontology,
                   DetectOptions options)
    : embed_(embed), regions_(regions), options_(options), kb_(knowledge_base_from(ontology)) {
  if (options_.top_n < 1) throw validation_error("detect: top_n must be >= 1");
  if (options_.k_kb < 1) throw validation_error("detect: k_kb must be >= 1");
  for (const auto& label : ontology.object_labels())
    class_embs_.emplace(label, embed_.embed_text(ontology.describe_label(label)));
}

DetectionResult Detector::detect(const RasterImage& image, const QueryContext& ctx) const {
  const auto regions = regions_.propose_regions(image, ctx);
  std::vector<EmbeddingVector> region_embs;
  region_embs.reserve(regions.size());
  for (const auto& r : regions) region_embs.push_back(embed_.embed_image(image.crop(r.bbox)));

  const auto set = options_.function_set;
  FunctionScores scores;
  if (set != FunctionSet::Knowledge) {
    scores.irv = irv_scores(embed_.embed_image(image), region_embs);
    scores.rrv = rrv_scores(region_embs);
  }
  if (set != FunctionSet::Visual) {
    scores.kb = kb_scores(region_embs, class_embs_, kb_, options_.k_kb,
                          [this](std::string_view text) { return embed_.embed_text(text); });
  }
  const auto combined = combine(scores, set);

  std::vector<RankedRegion> ranked;
  ranked.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    RankedRegion r{regions[i], classify_region(region_embs[i], class_embs_), combined[i], {}, {}, {}};
    if (scores.irv) r.irv = (*scores.irv)[i];
    if (scores.rrv) r.rrv = (*scores.rrv)[i];
    if (scores.kb) r.kb = (*scores.kb)[i];
    ranked.push_back(std::move(r));
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedRegion& a, const RankedRegion& b) { return a.combined < b.combined; });
  if (ranked.size() > static_cast<std::size_t>(options_.top_n)) ranked.resize(static_cast<std::size_t>(options_.top_n));
  return {std::move(ranked), set};
}

DetectionResult detect(const RasterImage& image, const EmbeddingProvider& embed, const RegionProvider& regions,
                       const Ontology& ontology, const DetectOptions& options, const QueryContext& ctx) {
  return Detector(embed, regions, ontology, options).detect(image, ctx);
}

}  // namespace anomforge
