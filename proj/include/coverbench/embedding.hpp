#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "coverbench/rng.hpp"

namespace coverbench {

// One embedder's vector for a piece of content. The gateway normalizes
// vectors at its boundary, so downstream cosine reduces to a dot product.
struct EmbeddingVector {
  std::string model_id;
  Eigen::VectorXd values;
  bool normalized = false;

  int dim() const { return static_cast<int>(values.size()); }

  bool finite() const { return values.allFinite(); }
};

inline EmbeddingVector l2_normalized(const EmbeddingVector& v) {
  double n = v.values.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("cannot normalize zero or non-finite vector (" +
                                v.model_id + ")");
  }
  EmbeddingVector out{v.model_id, v.values / n, true};
  return out;
}

// Cosine similarity in [-1, 1]. Exactly the dot product when both inputs
// are normalized; otherwise divides by the norms.
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.model_id != b.model_id) {
    throw std::invalid_argument("cosine: model mismatch '" + a.model_id +
                                "' vs '" + b.model_id + "'");
  }
  if (a.dim() != b.dim() || a.dim() == 0) {
    throw std::invalid_argument("cosine: dim mismatch for model '" +
                                a.model_id + "'");
  }
  double dot = a.values.dot(b.values);
  if (a.normalized && b.normalized) return dot;
  double na = a.values.norm();
  double nb = b.values.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw std::invalid_argument("cosine: zero-norm vector");
  }
  return dot / (na * nb);
}

// Deterministic pseudo-random direction; components uniform in [-1, 1]
// then L2-normalized. No transcendental-function dependence, so the bytes
// are identical across platforms.
inline Eigen::VectorXd seeded_direction(std::uint64_t seed, int dim) {
  SplitMix64 rng(seed);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
  double n = v.norm();
  if (n == 0.0) {  // astronomically unlikely; keep it total
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

}  // namespace coverbench
