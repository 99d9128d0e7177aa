#include "doctest.h"

#include "gef/numerics.hpp"
#include "gef/rng.hpp"

using namespace gef;

namespace {

// Symmetric matrix with a prescribed spectrum.
Matrix with_spectrum(const Vector& eigvals, RandomStream& rng) {
  const int n = static_cast<int>(eigvals.size());
  Matrix raw(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) raw(i, j) = rng.normal(0.0, 1.0);
  }
  Eigen::HouseholderQR<Matrix> qr(raw);
  Matrix q = qr.householderQ();
  return q * eigvals.asDiagonal() * q.transpose();
}

}  // namespace

TEST_CASE("truncated_pinv satisfies Moore-Penrose identities on a full-rank PSD matrix") {
  RandomStream rng(31, 0);
  Vector eigvals(5);
  eigvals << 3.0, 1.5, 0.8, 0.2, 0.05;
  Matrix m = with_spectrum(eigvals, rng);
  Matrix p = truncated_pinv(m);

  CHECK((m * p * m - m).norm() < 1e-9);
  CHECK((p * m * p - p).norm() < 1e-9);
  CHECK((m * p - (m * p).transpose()).norm() < 1e-9);
  CHECK((p * m - (p * m).transpose()).norm() < 1e-9);
}

TEST_CASE("truncated_pinv drops singular values below the threshold") {
  RandomStream rng(37, 0);
  Vector eigvals(6);
  eigvals << 2.0, 1.0, 0.5, 1e-5, 1e-6, 0.0;
  Matrix m = with_spectrum(eigvals, rng);

  int discarded = 0;
  Matrix p = truncated_pinv(m, {}, &discarded);
  CHECK(discarded == 3);

  // Rank of the pseudo-inverse equals the retained count.
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  int rank = 0;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(es.eigenvalues()(i)) > 1e-8) ++rank;
  }
  CHECK(rank == 3);

  // No retained inverse eigenvalue exceeds 1 / threshold.
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 / 1e-4 + 1e-6);
}

TEST_CASE("truncated_pinv symmetrizes non-symmetric input") {
  Matrix m(2, 2);
  m << 2.0, 1.0, 0.0, 2.0;
  Matrix sym = 0.5 * (m + m.transpose());
  CHECK((truncated_pinv(m) - truncated_pinv(sym)).norm() < 1e-12);
}

TEST_CASE("OuterProductAccumulator merge matches single-stream accumulation") {
  RandomStream rng(41, 0);
  const int dim = 4;
  OuterProductAccumulator whole(dim), part1(dim), part2(dim);
  for (int s = 0; s < 40; ++s) {
    Vector phi(dim);
    for (int i = 0; i < dim; ++i) phi(i) = rng.normal(0.0, 1.0);
    const double target = rng.normal(0.0, 1.0);
    whole.add(phi, target);
    (s < 17 ? part1 : part2).add(phi, target);
  }
  part1.merge(part2);
  CHECK(part1.count() == whole.count());
  CHECK((part1.sum_outer() - whole.sum_outer()).norm() == doctest::Approx(0.0));
  CHECK((part1.sum_cross() - whole.sum_cross()).norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(part1.merge(OuterProductAccumulator(dim + 1)), ContractError);
}

TEST_CASE("solve_least_squares recovers planted weights on a well-conditioned system") {
  RandomStream rng(43, 0);
  const int dim = 5;
  Vector truth(dim);
  truth << 1.0, -2.0, 0.5, 3.0, -0.25;
  OuterProductAccumulator acc(dim);
  for (int s = 0; s < 200; ++s) {
    Vector phi(dim);
    for (int i = 0; i < dim; ++i) phi(i) = rng.normal(0.0, 1.0);
    acc.add(phi, phi.dot(truth));
  }
  Vector w = solve_least_squares(acc);
  CHECK((w - truth).norm() < 1e-8);
}

TEST_CASE("solve_least_squares rejects an empty accumulator") {
  OuterProductAccumulator acc(3);
  CHECK_THROWS_AS((void)solve_least_squares(acc), ContractError);
}
