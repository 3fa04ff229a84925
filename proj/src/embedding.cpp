#include "anomforge/embedding.hpp"

#include <cmath>

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw validation_error("embedding must have positive dimension");
  for (double v : values_)
    if (!std::isfinite(v)) throw validation_error("embedding contains a non-finite entry");
}

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  EmbeddingVector out(std::move(values));
  const double n = out.norm();
  if (!(n > 0.0)) throw validation_error("cannot normalize a zero vector");
  for (double& v : out.values_) v /= n;
  return out;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw validation_error(fmt::format("embedding dimension mismatch: {} vs {}", a.dim(), b.dim()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace anomforge
