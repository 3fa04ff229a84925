#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anomforge/embedding.hpp"
#include "anomforge/filter.hpp"
#include "anomforge/ontology.hpp"
#include "anomforge/providers.hpp"

namespace anomforge {

// visual = {IRV, RRV}, knowledge = {KB}, all = {IRV, RRV, KB}
enum class FunctionSet { All, Visual, Knowledge };

std::string_view to_string(FunctionSet set);
FunctionSet parse_function_set(std::string_view text);

inline constexpr int kDefaultKbDepth = 5;

// Image-region visual similarity: image . region for each region.
std::vector<double> irv_scores(const EmbeddingVector& image_emb, std::span<const EmbeddingVector> region_embs);

// Region-region visual similarity: mean dot product with every region,
// the region itself included.
std::vector<double> rrv_scores(std::span<const EmbeddingVector> region_embs);

using TextEmbedder = std::function<EmbeddingVector(std::string_view)>;
using KnowledgeBase = std::map<std::string, std::string, std::less<>>;

KnowledgeBase knowledge_base_from(const Ontology& ontology);

// The description text retrieved for one region: descriptions of its k_kb
// most similar classes, best first, one per line.
std::string retrieve_descriptions(const EmbeddingVector& region_emb, const LabelEmbeddings& class_embs,
                                  const KnowledgeBase& kb, int k_kb);

// Knowledge-based similarity: embeds each region's retrieved description text
// and takes the mean dot product against every region's, self included.
std::vector<double> kb_scores(std::span<const EmbeddingVector> region_embs, const LabelEmbeddings& class_embs,
                              const KnowledgeBase& kb, int k_kb, const TextEmbedder& embed_text);

struct FunctionScores {
  std::optional<std::vector<double>> irv;
  std::optional<std::vector<double>> rrv;
  std::optional<std::vector<double>> kb;
};

// Per region: mean over the selected functions of the z-scored function
// values (population standard deviation). A function that is constant
// across regions contributes 0.
std::vector<double> combine(const FunctionScores& scores, FunctionSet set);

// Argmax of region . class embedding; ties go to the smaller label.
std::string classify_region(const EmbeddingVector& region_emb, const LabelEmbeddings& class_embs);

struct RankedRegion {
  Region region;
  std::string label;
  double combined = 0.0;
  std::optional<double> irv;
  std::optional<double> rrv;
  std::optional<double> kb;
};

struct DetectionResult {
  // Ascending by combined score: the most anomalous region first.
  std::vector<RankedRegion> ranked;
  FunctionSet function_set = FunctionSet::All;
};

nlohmann::json to_json(const DetectionResult& result);
DetectionResult detection_from_json(const nlohmann::json& doc);

struct DetectOptions {
  FunctionSet function_set = FunctionSet::All;
  int k_kb = kDefaultKbDepth;
  int top_n = 3;
};

// Holds the class text embeddings so they are computed once per run.
class Detector {
 public:
  Detector(const EmbeddingProvider& embed, const RegionProvider& regions, const Ontology& ontology,
           DetectOptions options = {});

  DetectionResult detect(const RasterImage& image, const QueryContext& ctx = {}) const;

  const LabelEmbeddings& class_embeddings() const { return class_embs_; }

 private:
  const EmbeddingProvider& embed_;
  const RegionProvider& regions_;
  DetectOptions options_;
  LabelEmbeddings class_embs_;
  KnowledgeBase kb_;
};

DetectionResult detect(const RasterImage& image, const EmbeddingProvider& embed, const RegionProvider& regions,
                       const Ontology& ontology, const DetectOptions& options, const QueryContext& ctx = {});

}  // namespace anomforge
