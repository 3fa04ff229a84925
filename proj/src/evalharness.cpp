#include "anomforge/evalharness.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "anomforge/error.hpp"
#include "anomforge/parallel.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::WordMatch: return "word_match";
    case Metric::ClassMatch: return "class_match";
    case Metric::BroadMatch: return "broad_match";
  }
  return "word_match";
}

Metric parse_metric(std::string_view text) {
  if (text == "word" || text == "word_match") return Metric::WordMatch;
  if (text == "class" || text == "class_match") return Metric::ClassMatch;
  if (text == "broad" || text == "broad_match") return Metric::BroadMatch;
  throw validation_error(fmt::format("metric must be word|class|broad, got '{}'", text));
}

void EvalConfig::validate() const {
  if (top_n != 1 && top_n != 3) throw validation_error(fmt::format("eval: top must be 1 or 3, got {}", top_n));
  if (prompt && trim(*prompt).empty()) throw validation_error("eval: prompt override is empty");
}

std::string build_prompt(const std::optional<std::string>& override_prompt) {
  if (!override_prompt) return std::string(kDefaultVqaPrompt);
  if (trim(*override_prompt).empty()) throw validation_error("eval: prompt override is empty");
  return *override_prompt;
}

bool word_match(std::string_view response, std::string_view truth) {
  return contains_token_run(tokenize(response), tokenize(truth));
}

ZeroShotMatcher::ZeroShotMatcher(const EmbeddingProvider& embed, const DescriptionProvider& describe,
                                 std::vector<std::string> labels, const Ontology& ontology)
    : embed_(embed), describe_(describe) {
  if (labels.empty()) throw validation_error("zero-shot matcher: no labels");
  for (auto& label : labels) {
    auto emb = embed_.embed_text(ontology.describe_label(label));
    label_embs_.emplace(std::move(label), std::move(emb));
  }
}

std::string ZeroShotMatcher::response_text(std::string_view response, bool use_descriptions) const {
  const auto body = trim(response);
  if (body.empty()) throw validation_error("zero-shot match: response is empty");
  if (!use_descriptions) return std::string(body);
  return fmt::format("{}\n{}", body, trim(describe_.describe(body)));
}

std::vector<std::string> ZeroShotMatcher::rank(std::string_view response, int top_n, bool use_descriptions) const {
  if (top_n < 1) throw validation_error("zero-shot match: top_n must be >= 1");
  const auto emb = embed_.embed_text(response_text(response, use_descriptions));
  std::map<std::string, double, std::less<>> sims;
  for (const auto& [label, label_emb] : label_embs_) sims.emplace(label, dot(emb, label_emb));
  auto ranked = ranked_labels(sims);
  if (ranked.size() > static_cast<std::size_t>(top_n)) ranked.resize(static_cast<std::size_t>(top_n));
  return ranked;
}

namespace {

std::vector<std::string> category_labels(const Ontology& ontology) {
  std::vector<std::string> out;
  for (const auto& c : ontology.broad_categories()) out.push_back(c.label);
  return out;
}

}  // namespace

std::vector<std::string> class_match(std::string_view response, const Ontology& ontology,
                                     const EmbeddingProvider& embed, const DescriptionProvider& describe,
                                     int top_n, bool use_descriptions) {
  return ZeroShotMatcher(embed, describe, ontology.object_labels(), ontology).rank(response, top_n, use_descriptions);
}

std::vector<std::string> broad_match(std::string_view response, const Ontology& ontology,
                                     const EmbeddingProvider& embed, const DescriptionProvider& describe,
                                     int top_n, bool use_descriptions) {
  if (ontology.broad_categories().size() != kBroadCategoryCount)
    throw validation_error("broad_match: ontology must have 10 broad categories");
  return ZeroShotMatcher(embed, describe, category_labels(ontology), ontology).rank(response, top_n, use_descriptions);
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json doc = {{"metric", report.metric},
                        {"total", report.total},
                        {"errors", report.failures.size()},
                        {"top1_accuracy", report.top1_accuracy}};
  doc["top3_accuracy"] = report.top3_accuracy ? nlohmann::json(*report.top3_accuracy) : nlohmann::json(nullptr);
  if (!report.confusion.empty()) doc["confusion"] = {{"labels", report.confusion_labels}, {"matrix", report.confusion}};
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, tally] : report.per_class)
    per_class[label] = {{"total", tally.total}, {"top1", tally.top1}, {"top3", tally.top3}};
  doc["per_class"] = per_class;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) failures.push_back({{"sample_id", f.sample_id}, {"error", f.message}});
  doc["failures"] = failures;
  return doc;
}

void write_confusion_csv(const EvalReport& report, std::ostream& out) {
  const auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  out << "true\\predicted";
  for (const auto& l : report.confusion_labels) out << ',' << quote(l);
  out << '\n';
  for (std::size_t i = 0; i < report.confusion.size(); ++i) {
    out << quote(report.confusion_labels[i]);
    for (auto v : report.confusion[i]) out << ',' << v;
    out << '\n';
  }
}

namespace {

struct SampleOutcome {
  std::string sample_id;
  std::string truth;        // label, or category for broad match
  bool top1 = false;
  bool top3 = false;
  std::string predicted1;   // broad match only
  std::optional<std::string> error;
};

void finalize(EvalReport& report, const std::vector<SampleOutcome>& outcomes, bool with_top3) {
  std::size_t hits1 = 0;
  std::size_t hits3 = 0;
  for (const auto& o : outcomes) {
    if (o.error) {
      report.failures.push_back({o.sample_id, *o.error});
      continue;
    }
    ++report.total;
    auto& tally = report.per_class[o.truth];
    ++tally.total;
    if (o.top1) ++hits1, ++tally.top1;
    if (o.top3) ++hits3, ++tally.top3;
  }
  const auto denom = static_cast<double>(report.total);
  report.top1_accuracy = report.total ? static_cast<double>(hits1) / denom : 0.0;
  if (with_top3) report.top3_accuracy = report.total ? static_cast<double>(hits3) / denom : 0.0;
}

}  // namespace

EvalReport evaluate(const std::vector<CandidateRecord>& records, const ImageLoader& load_image,
                    const EvalProviders& providers, const EvalConfig& config, const Ontology& ontology) {
  config.validate();
  std::vector<const CandidateRecord*> accepted;
  for (const auto& r : records)
    if (r.decision.is_accepted()) accepted.push_back(&r);
  if (accepted.empty()) throw validation_error("eval: dataset has no accepted images");
  std::sort(accepted.begin(), accepted.end(),
            [](const CandidateRecord* a, const CandidateRecord* b) { return a->sample_id() < b->sample_id(); });

  const auto prompt = build_prompt(config.prompt);
  const bool broad = config.metric == Metric::BroadMatch;
  const bool with_top3 = config.metric != Metric::WordMatch && config.top_n == 3;
  const int depth = with_top3 ? 3 : 1;

  std::optional<ZeroShotMatcher> matcher;
  if (config.metric == Metric::ClassMatch)
    matcher.emplace(providers.embed, providers.describe, ontology.object_labels(), ontology);
  if (broad) {
    if (ontology.broad_categories().size() != kBroadCategoryCount)
      throw validation_error("eval: ontology must have 10 broad categories");
    matcher.emplace(providers.embed, providers.describe, category_labels(ontology), ontology);
  }

  const auto outcomes = parallel_map(accepted.size(), config.jobs, [&](std::size_t i) {
    const auto& record = *accepted[i];
    SampleOutcome o;
    o.sample_id = record.sample_id();
    const auto& truth_label = record.task.target;
    o.truth = broad ? ontology.object(truth_label).broad_category : truth_label;
    try {
      const auto image = load_image(record);
      const auto response = providers.vqa.answer(image, prompt, {record.task.image_id, truth_label});
      if (config.metric == Metric::WordMatch) {
        o.top1 = word_match(response, truth_label);
      } else {
        const auto ranked = matcher->rank(response, depth, config.use_descriptions);
        o.top1 = ranked.front() == o.truth;
        o.top3 = std::find(ranked.begin(), ranked.end(), o.truth) != ranked.end();
        o.predicted1 = ranked.front();
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Provider && e.kind() != ErrorKind::Io) throw;
      o.error = e.what();
    }
    return o;
  });

  EvalReport report;
  report.metric = std::string(to_string(config.metric));
  finalize(report, outcomes, with_top3);

  if (broad) {
    report.confusion_labels = category_labels(ontology);
    report.confusion.assign(kBroadCategoryCount, std::vector<std::size_t>(kBroadCategoryCount, 0));
    const auto index_of = [&](const std::string& label) {
      return static_cast<std::size_t>(
          std::find(report.confusion_labels.begin(), report.confusion_labels.end(), label) -
          report.confusion_labels.begin());
    };
    for (const auto& o : outcomes)
      if (!o.error) ++report.confusion[index_of(o.truth)][index_of(o.predicted1)];
  }
  return report;
}

EvalReport score_detector_results(const std::vector<SampleDetection>& results,
                                  const std::vector<CandidateRecord>& manifest, int top_n) {
  if (top_n != 1 && top_n != 3) throw validation_error(fmt::format("detector eval: top must be 1 or 3, got {}", top_n));
  if (results.empty()) throw validation_error("detector eval: no detection results");
  std::map<std::string, const CandidateRecord*> by_id;
  for (const auto& r : manifest) by_id.emplace(r.sample_id(), &r);

  std::vector<const SampleDetection*> ordered;
  for (const auto& r : results) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const SampleDetection* a, const SampleDetection* b) { return a->sample_id < b->sample_id; });

  std::vector<SampleOutcome> outcomes;
  for (const auto* r : ordered) {
    auto it = by_id.find(r->sample_id);
    if (it == by_id.end())
      throw validation_error(fmt::format("detector eval: result '{}' has no manifest entry", r->sample_id));
    if (r->result.ranked.empty())
      throw validation_error(fmt::format("detector eval: result '{}' has no regions", r->sample_id));
    SampleOutcome o;
    o.sample_id = r->sample_id;
    o.truth = it->second->task.target;
    const auto& ranked = r->result.ranked;
    o.top1 = ranked.front().label == o.truth;
    const auto depth = std::min<std::size_t>(3, ranked.size());
    o.top3 = std::any_of(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(depth),
                         [&](const RankedRegion& x) { return x.label == o.truth; });
    outcomes.push_back(std::move(o));
  }

  EvalReport report;
  report.metric = fmt::format("detector_{}", to_string(results.front().result.function_set));
  finalize(report, outcomes, top_n == 3);
  return report;
}

}  // namespace anomforge
