#include "doctest.h"

#include "gef/perturb.hpp"
#include "helpers.hpp"

using namespace gef;
using namespace gef::testhelp;

TEST_CASE("distribution spec grammar round-trips") {
  for (const char* spec : {"ux:0.2", "ua:0.5", "ba:0.3", "ux:0.5+ua:0.5"}) {
    PerturbationDistribution dist = PerturbationDistribution::parse(spec);
    CHECK(dist.to_string() == spec);
  }
  CHECK_THROWS_AS(PerturbationDistribution::parse("zz:0.5"), ContractError);
  CHECK_THROWS_AS(PerturbationDistribution::parse("ux"), ContractError);
  CHECK_THROWS_AS(PerturbationDistribution::parse("ux:abc"), ContractError);
  CHECK_THROWS_AS(PerturbationDistribution::parse("ux:0"), ContractError);
  CHECK_THROWS_AS(PerturbationDistribution::parse("ux:1.5"), ContractError);
  CHECK_THROWS_AS(PerturbationDistribution::parse("ua:0.2+ua:0.3"), ContractError);
}

TEST_CASE("perturbable set is supp(A) plus the diagonal") {
  RandomStream rng(71, 0);
  Graph g = random_graph(6, 2, rng);
  for (const auto& [i, j] : perturbable_entries(g)) {
    CHECK((i == j || g.a(i, j) != 0.0));
  }
  std::size_t expected = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j || g.a(i, j) != 0.0) ++expected;
    }
  }
  CHECK(perturbable_entries(g).size() == expected);
}

TEST_CASE("uniform feature noise respects the sigma * range bound") {
  RandomStream rng(73, 0);
  Graph g = random_graph(5, 3, rng);
  auto dist = PerturbationDistribution::parse("ux:0.2");
  const double bound = 0.2 * (g.x.maxCoeff() - g.x.minCoeff());

  RandomStream sampler(1, 2);
  for (int s = 0; s < 50; ++s) {
    Perturbation p = sample(dist, g, sampler);
    CHECK(p.eps_x.cwiseAbs().maxCoeff() <= bound);
    CHECK(p.eps_a.norm() == 0.0);
  }
}

TEST_CASE("uniform edge noise folds the clip into eps_a") {
  RandomStream rng(79, 0);
  Graph g = random_graph(6, 2, rng);
  auto dist = PerturbationDistribution::parse("ua:0.5");

  RandomStream sampler(3, 4);
  for (int s = 0; s < 50; ++s) {
    Perturbation p = sample(dist, g, sampler);
    Matrix perturbed = g.a - p.eps_a;
    CHECK(perturbed.minCoeff() >= 0.0);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (i != j && g.a(i, j) == 0.0) {
          CHECK(p.eps_a(i, j) == 0.0);
        } else {
          // A - eps within [max(A - sigma, 0), A + sigma].
          CHECK(perturbed(i, j) <= g.a(i, j) + 0.5 + 1e-12);
          CHECK(perturbed(i, j) >= std::max(g.a(i, j) - 0.5, 0.0) - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("bernoulli edge noise drops edges whole") {
  RandomStream rng(83, 0);
  Graph g = random_graph(6, 2, rng);
  auto dist = PerturbationDistribution::parse("ba:0.5");

  RandomStream sampler(5, 6);
  bool any_dropped = false;
  for (int s = 0; s < 50; ++s) {
    Perturbation p = sample(dist, g, sampler);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        CHECK((p.eps_a(i, j) == 0.0 || p.eps_a(i, j) == g.a(i, j)));
        if (i != j && p.eps_a(i, j) != 0.0) any_dropped = true;
      }
    }
  }
  CHECK(any_dropped);
}

TEST_CASE("product distribution perturbs both inputs") {
  RandomStream rng(89, 0);
  Graph g = random_graph(5, 2, rng);
  auto dist = PerturbationDistribution::parse("ux:0.5+ua:0.5");
  RandomStream sampler(7, 8);
  Perturbation p = sample(dist, g, sampler);
  CHECK(p.eps_x.norm() > 0.0);
  CHECK(p.eps_a.norm() > 0.0);
}

TEST_CASE("sample_batch is deterministic and purpose streams are disjoint") {
  RandomStream rng(97, 0);
  Graph g = random_graph(5, 2, rng);
  auto dist = PerturbationDistribution::parse("ux:0.3+ua:0.4");

  auto b1 = sample_batch(dist, g, 42, 3, 10, StreamPurpose::Eval);
  auto b2 = sample_batch(dist, g, 42, 3, 10, StreamPurpose::Eval);
  for (int s = 0; s < 10; ++s) {
    CHECK((b1[s].eps_x - b2[s].eps_x).norm() == 0.0);
    CHECK((b1[s].eps_a - b2[s].eps_a).norm() == 0.0);
  }

  auto solver = sample_batch(dist, g, 42, 3, 10, StreamPurpose::Solver);
  CHECK((solver[0].eps_x - b1[0].eps_x).norm() > 0.0);

  auto other_node = sample_batch(dist, g, 42, 4, 10, StreamPurpose::Eval);
  CHECK((other_node[0].eps_x - b1[0].eps_x).norm() > 0.0);
}
