#pragma once

#include <map>
#include <string>
#include <vector>

#include "anomforge/candidate.hpp"
#include "anomforge/embedding.hpp"
#include "anomforge/ontology.hpp"
#include "anomforge/providers.hpp"

namespace anomforge {

inline constexpr int kDefaultFilterK = 5;

using LabelEmbeddings = std::map<std::string, EmbeddingVector, std::less<>>;

// scores[l] = region . label_embs[l] for every provided label.
SimilarityScoreSet score_candidate(const EmbeddingVector& region_emb, const LabelEmbeddings& label_embs,
                                   std::string_view target, int k);

// Checks target membership, k >= 1 and that scores are finite and within
// [-1, 1] (1e-9 slack for rounding).
void validate_scoreset(const SimilarityScoreSet& scoreset);

// Zero-based position of `label` in the ranking. Higher score ranks first;
// equal scores are ordered by label, so the rank never depends on insertion
// order.
std::size_t rank_of(const SimilarityScoreSet& scoreset, std::string_view label);

// Labels ordered best-first under the same rule as rank_of.
std::vector<std::string> ranked_labels(const std::map<std::string, double, std::less<>>& scores);

bool topk_indicator(const SimilarityScoreSet& scoreset, std::string_view label);

// Accepted iff the target is top-k and no taboo label is. The target check is
// reported first; taboo labels are checked in the order given.
Decision accept(const SimilarityScoreSet& scoreset, const std::vector<std::string>& taboo);

// Text embeddings of "label: description" for every object and taboo label.
LabelEmbeddings embed_labels(const EmbeddingProvider& embed, const Ontology& ontology);

// Scores and decides every record; output order equals input order. A
// record whose region embedding fails with a provider error is rejected with
// reason "provider-error: ...".
std::vector<CandidateRecord> filter_dataset(std::vector<CandidateRecord> records,
                                            const EmbeddingProvider& embed, const Ontology& ontology,
                                            int k = kDefaultFilterK, unsigned jobs = 1);

}  // namespace anomforge
