#include "gef/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace gef {

Matrix truncated_pinv(const Matrix& m, const TruncatedSvdConfig& cfg) {
  return truncated_pinv(m, cfg, nullptr);
}

Matrix truncated_pinv(const Matrix& m, const TruncatedSvdConfig& cfg, int* discarded) {
  if (m.rows() != m.cols()) throw ContractError("truncated_pinv: non-square input");
  if (cfg.singular_value_threshold <= 0.0) {
    throw ContractError("truncated_pinv: threshold must be > 0");
  }
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    const double residual = sym.norm();
    throw NumericalError("truncated_pinv: eigendecomposition did not converge", residual);
  }
  const Vector& values = solver.eigenvalues();
  const Matrix& vectors = solver.eigenvectors();
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  int dropped = 0;
  // Relative cutoff: scale by the spectral radius so ill-conditioned but
  // small-magnitude moment matrices are truncated as aggressively as large
  // ones. The floor of 1 keeps the absolute guarantee that anything below
  // the configured threshold is always excluded.
  const double sigma_max = values.size() > 0 ? values.cwiseAbs().maxCoeff() : 0.0;
  const double cutoff = cfg.singular_value_threshold * std::max(1.0, sigma_max);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double sigma = std::abs(values[i]);
    if (sigma < cutoff) {
      ++dropped;
      continue;
    }
    out.noalias() += (1.0 / values[i]) * vectors.col(i) * vectors.col(i).transpose();
  }
  if (discarded) *discarded = dropped;
  return out;
}

OuterProductAccumulator::OuterProductAccumulator(int dim) : dim_(dim) {
  if (dim < 1) throw ContractError("OuterProductAccumulator: dim must be >= 1");
  sum_outer_ = Matrix::Zero(dim, dim);
  sum_cross_ = Vector::Zero(dim);
}

void OuterProductAccumulator::add(const Vector& phi, double target) {
  if (phi.size() != dim_) throw ContractError("OuterProductAccumulator: sample dim mismatch");
  sum_outer_.noalias() += phi * phi.transpose();
  sum_cross_.noalias() += phi * target;
  ++count_;
}

void OuterProductAccumulator::merge(const OuterProductAccumulator& other) {
  if (other.dim_ != dim_) throw ContractError("OuterProductAccumulator: merge dim mismatch");
  sum_outer_ += other.sum_outer_;
  sum_cross_ += other.sum_cross_;
  count_ += other.count_;
}

Vector solve_least_squares(const OuterProductAccumulator& acc,
                           const TruncatedSvdConfig& cfg, int* discarded) {
  if (acc.count() == 0) throw ContractError("solve_least_squares: empty accumulator");
  const double inv_count = 1.0 / static_cast<double>(acc.count());
  Matrix mean_outer = acc.sum_outer() * inv_count;
  Vector mean_cross = acc.sum_cross() * inv_count;
  return truncated_pinv(mean_outer, cfg, discarded) * mean_cross;
}

}  // namespace gef
