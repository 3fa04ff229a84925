#pragma once

#include <span>
#include <vector>

namespace anomforge {

// Fixed-length real vector from a joint visual-language embedding model.
// Vectors built through normalized() are L2-normalized on receipt, so every
// dot product downstream is a cosine similarity.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Validates finiteness; does not normalize.
  explicit EmbeddingVector(std::vector<double> values);

  static EmbeddingVector normalized(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// Throws a validation error on dimension mismatch.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace anomforge
