#include "anomforge/filter.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "anomforge/error.hpp"
#include "anomforge/parallel.hpp"

namespace anomforge {

SimilarityScoreSet score_candidate(const EmbeddingVector& region_emb, const LabelEmbeddings& label_embs,
                                   std::string_view target, int k) {
  if (!label_embs.contains(target))
    throw validation_error(fmt::format("score_candidate: missing label embedding for target '{}'", target));
  SimilarityScoreSet out;
  out.target = std::string(target);
  out.k = k;
  for (const auto& [label, emb] : label_embs) out.scores.emplace(label, dot(region_emb, emb));
  validate_scoreset(out);
  return out;
}

void validate_scoreset(const SimilarityScoreSet& scoreset) {
  if (scoreset.k < 1) throw validation_error(fmt::format("score set: k must be >= 1, got {}", scoreset.k));
  if (!scoreset.scores.contains(scoreset.target))
    throw validation_error(fmt::format("score set: target '{}' has no score", scoreset.target));
  constexpr double slack = 1e-9;
  for (const auto& [label, score] : scoreset.scores) {
    if (!std::isfinite(score) || score < -1.0 - slack || score > 1.0 + slack)
      throw validation_error(fmt::format("score set: score for '{}' is {}, outside [-1, 1]", label, score));
  }
}

std::size_t rank_of(const SimilarityScoreSet& scoreset, std::string_view label) {
  auto it = scoreset.scores.find(label);
  if (it == scoreset.scores.end()) throw validation_error(fmt::format("score set: unknown label '{}'", label));
  const double score = it->second;
  std::size_t rank = 0;
  for (const auto& [other, other_score] : scoreset.scores) {
    if (other_score > score || (other_score == score && other < it->first)) ++rank;
  }
  return rank;
}

std::vector<std::string> ranked_labels(const std::map<std::string, double, std::less<>>& scores) {
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [label, score] : items) out.push_back(std::move(label));
  return out;
}

bool topk_indicator(const SimilarityScoreSet& scoreset, std::string_view label) {
  return rank_of(scoreset, label) < static_cast<std::size_t>(scoreset.k);
}

Decision accept(const SimilarityScoreSet& scoreset, const std::vector<std::string>& taboo) {
  validate_scoreset(scoreset);
  if (!topk_indicator(scoreset, scoreset.target)) return Decision::rejected(std::string(kReasonTargetNotTopK));
  for (const auto& t : taboo) {
    if (topk_indicator(scoreset, t)) return Decision::rejected(taboo_reason(t));
  }
  return Decision::accepted();
}

LabelEmbeddings embed_labels(const EmbeddingProvider& embed, const Ontology& ontology) {
  LabelEmbeddings out;
  for (const auto& label : ontology.object_labels())
    out.emplace(label, embed.embed_text(ontology.describe_label(label)));
  for (const auto& label : ontology.taboo_labels())
    out.emplace(label, embed.embed_text(ontology.describe_label(label)));
  return out;
}

std::vector<CandidateRecord> filter_dataset(std::vector<CandidateRecord> records,
                                            const EmbeddingProvider& embed, const Ontology& ontology,
                                            int k, unsigned jobs) {
  if (k < 1) throw validation_error(fmt::format("filter: k must be >= 1, got {}", k));
  const auto label_embs = embed_labels(embed, ontology);
  const auto taboo = ontology.taboo_labels();

  auto decided = parallel_map(records.size(), jobs, [&](std::size_t i) {
    CandidateRecord r = std::move(records[i]);
    if (!ontology.find_object(r.task.target))
      throw validation_error(fmt::format("filter: {} targets unknown object '{}'", r.sample_id(), r.task.target));
    r.scores.reset();
    try {
      const auto region_emb = embed.embed_image(r.region_image);
      r.scores = score_candidate(region_emb, label_embs, r.task.target, k);
      r.decision = accept(*r.scores, taboo);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Provider) throw;
      r.scores.reset();
      r.decision = Decision::rejected(fmt::format("{}: {}", kReasonProviderError, e.what()));
    }
    return r;
  });
  return decided;
}

}  // namespace anomforge
