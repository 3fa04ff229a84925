#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anomforge/candidate.hpp"
#include "anomforge/detector.hpp"
#include "anomforge/filter.hpp"
#include "anomforge/ontology.hpp"
#include "anomforge/providers.hpp"

namespace anomforge {

inline constexpr std::string_view kDefaultVqaPrompt =
    "Question: A context-dependent anomaly is an object that is anomalous based only on the context in "
    "which it is found. What object is the context-dependent anomaly in this scene? Short answer: ";

enum class Metric { WordMatch, ClassMatch, BroadMatch };

std::string_view to_string(Metric metric);
// Accepts word|class|broad and the long forms word_match|class_match|broad_match.
Metric parse_metric(std::string_view text);

struct EvalConfig {
  std::optional<std::string> prompt;  // unset: the default prompt
  Metric metric = Metric::WordMatch;
  int top_n = 1;  // 1 or 3
  bool use_descriptions = true;
  unsigned jobs = 1;

  void validate() const;
};

std::string build_prompt(const std::optional<std::string>& override_prompt = std::nullopt);

// True iff the truth's tokens appear as a contiguous run in the response's
// tokens (lowercased, split on non-alphanumerics).
bool word_match(std::string_view response, std::string_view truth);

// Zero-shot matcher over a fixed label set, each label embedded once as
// "label: description".
class ZeroShotMatcher {
 public:
  ZeroShotMatcher(const EmbeddingProvider& embed, const DescriptionProvider& describe,
                  std::vector<std::string> labels, const Ontology& ontology);

  // The text that is embedded for a response.
  std::string response_text(std::string_view response, bool use_descriptions) const;

  // Labels by descending similarity, truncated to top_n.
  std::vector<std::string> rank(std::string_view response, int top_n, bool use_descriptions) const;

 private:
  const EmbeddingProvider& embed_;
  const DescriptionProvider& describe_;
  LabelEmbeddings label_embs_;
};

std::vector<std::string> class_match(std::string_view response, const Ontology& ontology,
                                     const EmbeddingProvider& embed, const DescriptionProvider& describe,
                                     int top_n, bool use_descriptions);

std::vector<std::string> broad_match(std::string_view response, const Ontology& ontology,
                                     const EmbeddingProvider& embed, const DescriptionProvider& describe,
                                     int top_n, bool use_descriptions = true);

struct ClassTally {
  std::size_t total = 0;
  std::size_t top1 = 0;
  std::size_t top3 = 0;
  bool operator==(const ClassTally&) const = default;
};

struct EvalFailure {
  std::string sample_id;
  std::string message;
  bool operator==(const EvalFailure&) const = default;
};

struct EvalReport {
  std::string metric;
  std::size_t total = 0;  // scored samples; failures are excluded
  double top1_accuracy = 0.0;
  std::optional<double> top3_accuracy;
  // Broad-match only. Rows: true category, columns: top-1 prediction, both in
  // the ontology's category order.
  std::vector<std::string> confusion_labels;
  std::vector<std::vector<std::size_t>> confusion;
  std::map<std::string, ClassTally> per_class;
  std::vector<EvalFailure> failures;

  bool operator==(const EvalReport&) const = default;
};

nlohmann::json to_json(const EvalReport& report);
void write_confusion_csv(const EvalReport& report, std::ostream& out);

using ImageLoader = std::function<RasterImage(const CandidateRecord&)>;

struct EvalProviders {
  const VqaProvider& vqa;
  const EmbeddingProvider& embed;
  const DescriptionProvider& describe;
};

// Scores every accepted record in sample-id order. Per-image provider
// failures are excluded from the denominator and listed in `failures`.
EvalReport evaluate(const std::vector<CandidateRecord>& records, const ImageLoader& load_image,
                    const EvalProviders& providers, const EvalConfig& config, const Ontology& ontology);

struct SampleDetection {
  std::string sample_id;
  DetectionResult result;
};

// A hit at n: the truth label is among the predicted labels of the n
// lowest-scoring regions.
EvalReport score_detector_results(const std::vector<SampleDetection>& results,
                                  const std::vector<CandidateRecord>& manifest, int top_n);

}  // namespace anomforge
