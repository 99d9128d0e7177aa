#pragma once

#include <Eigen/Dense>

#include "gef/error.hpp"
#include "gef/graph.hpp"

namespace gef {

struct TruncatedSvdConfig {
  // Singular values below this are discarded from the pseudo-inverse.
  double singular_value_threshold = 1e-4;
  int max_iterations = 1000;
  double convergence_tol = 1e-12;
};

// Truncated pseudo-inverse of a symmetric matrix via its eigendecomposition
// (which coincides with the SVD for symmetric PSD matrices). Non-symmetric
// input is symmetrized as (M + M^T) / 2.
Matrix truncated_pinv(const Matrix& m, const TruncatedSvdConfig& cfg = {});

// Same, also reporting how many singular values were discarded.
Matrix truncated_pinv(const Matrix& m, const TruncatedSvdConfig& cfg, int* discarded);

// Streaming accumulator for E[phi phi^T] and E[phi * target]. Samples are
// never materialized; merge is associative and commutative, so per-thread
// partials reduce deterministically.
class OuterProductAccumulator {
 public:
  explicit OuterProductAccumulator(int dim);

  void add(const Vector& phi, double target);
  void merge(const OuterProductAccumulator& other);

  int dim() const { return dim_; }
  long count() const { return count_; }
  const Matrix& sum_outer() const { return sum_outer_; }
  const Vector& sum_cross() const { return sum_cross_; }

 private:
  int dim_;
  long count_ = 0;
  Matrix sum_outer_;
  Vector sum_cross_;
};

// Minimum-norm solution of E[phi phi^T] w = E[phi * target] via the
// truncated pseudo-inverse.
Vector solve_least_squares(const OuterProductAccumulator& acc,
                           const TruncatedSvdConfig& cfg = {},
                           int* discarded = nullptr);

}  // namespace gef
