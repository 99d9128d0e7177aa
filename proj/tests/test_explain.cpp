#include "doctest.h"

#include "gef/explain.hpp"
#include "gef/numerics.hpp"
#include "helpers.hpp"

using namespace gef;
using namespace gef::testhelp;

namespace {

// Empirical unfaithfulness of a flat weight vector on a fixed sample set,
// using the same coordinate layout as linear_optimal.
double linear_objective(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
                        const Attribution& attr, const std::vector<Perturbation>& samples) {
  const double f0 = forward(m, g, qoi);
  double sum = 0.0;
  for (const auto& p : samples) {
    Graph gp;
    gp.x = g.x - p.eps_x;
    gp.a = (g.a - p.eps_a).cwiseMax(0.0);
    const double target = f0 - forward(m, gp, qoi);
    const double pred = (attr.phi_x.array() * p.eps_x.array()).sum() +
                        (attr.phi_a.array() * p.eps_a.array()).sum();
    sum += (pred - target) * (pred - target);
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("saliency equals grad_input restricted to perturbable entries") {
  RandomStream rng(101, 0);
  Graph g = random_graph(6, 3, rng);
  GcnModel m = random_conv_model(3, {4, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(6, 1), 0};

  Attribution attr = saliency(m, g, qoi);
  InputGradients gin = grad_input(m, g, qoi);
  CHECK((attr.phi_x - gin.dx).norm() == 0.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j || g.a(i, j) != 0.0) {
        CHECK(attr.phi_a(i, j) == gin.da(i, j));
      } else {
        CHECK(attr.phi_a(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("IG with the input baseline degenerates to saliency") {
  RandomStream rng(103, 0);
  Graph g = random_graph(5, 2, rng);
  GcnModel m = random_conv_model(2, {3, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(5, 2), 1};

  Attribution ig = integrated_gradients(m, g, qoi, IgBaseline::Input, 1);
  Attribution sm = saliency(m, g, qoi);
  CHECK((ig.phi_x - sm.phi_x).norm() == 0.0);
  CHECK((ig.phi_a - sm.phi_a).norm() == 0.0);
}

TEST_CASE("gradient methods coincide on a linear model") {
  RandomStream rng(107, 0);
  Graph g = random_graph(5, 2, rng);
  // Dense-only network: F is exactly linear in X and ignores A, so the
  // gradient is constant along any IG path and every baseline agrees.
  GcnModel m;
  Matrix w(2, 3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) w(i, j) = rng.normal(0.0, 1.0);
  }
  m.layers.push_back({LayerKind::Dense, std::move(w), Vector::Zero(3), false});
  QuantityOfInterest qoi{NodeSelector::one_hot(5, 0), 1};

  Attribution sm = saliency(m, g, qoi);
  Attribution igz = integrated_gradients(m, g, qoi, IgBaseline::Zero, 50);
  Attribution igr = integrated_gradients(m, g, qoi, IgBaseline::Random, 50, 7);
  CHECK((sm.phi_x - igz.phi_x).norm() < 1e-10);
  CHECK((sm.phi_x - igr.phi_x).norm() < 1e-10);
  CHECK(igz.phi_a.norm() == 0.0);
  CHECK(igr.phi_a.norm() == 0.0);
}

TEST_CASE("IG step refinement converges") {
  RandomStream rng(109, 0);
  Graph g = random_graph(6, 3, rng);
  GcnModel m = random_conv_model(3, {4, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(6, 3), 0};

  Attribution coarse = integrated_gradients(m, g, qoi, IgBaseline::Zero, 50);
  Attribution fine = integrated_gradients(m, g, qoi, IgBaseline::Zero, 500);
  const double rel = (coarse.phi_x - fine.phi_x).norm() / fine.phi_x.norm();
  CHECK(rel < 0.05);
}

TEST_CASE("linear_optimal recovers the gradient on a linear model") {
  RandomStream rng(113, 0);
  Graph g = random_graph(5, 2, rng);
  GcnModel m = random_conv_model(2, {3}, false, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(5, 1), 2};
  auto dist = PerturbationDistribution::parse("ux:0.3");

  // F(X) is linear in X, so the optimal linear difference model in eps_x is
  // exactly the gradient.
  Attribution attr = linear_optimal(m, g, qoi, dist, 300, 5);
  Attribution sm = saliency(m, g, qoi);
  CHECK((attr.phi_x - sm.phi_x).norm() < 1e-6);
}

TEST_CASE("linear_optimal minimizes the empirical objective") {
  RandomStream rng(127, 0);
  Graph g = random_graph(6, 2, rng);
  GcnModel m = random_conv_model(2, {3, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(6, 2), 0};
  auto dist = PerturbationDistribution::parse("ux:0.4+ua:0.5");
  const std::uint64_t seed = 11;
  const int n_samples = 150;

  Attribution attr = linear_optimal(m, g, qoi, dist, n_samples, seed);
  auto samples = sample_batch(dist, g, seed, 2, n_samples, StreamPurpose::Solver);
  const double best = linear_objective(m, g, qoi, attr, samples);

  RandomStream noise(131, 0);
  for (int trial = 0; trial < 30; ++trial) {
    Attribution other = attr;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 2; ++j) other.phi_x(i, j) += noise.normal(0.0, 0.05);
    }
    for (const auto& [i, j] : perturbable_entries(g)) {
      other.phi_a(i, j) += noise.normal(0.0, 0.05);
    }
    CHECK(linear_objective(m, g, qoi, other, samples) >= best - 1e-12);
  }
}

TEST_CASE("kec_phi explains the surrogate difference exactly") {
  RandomStream rng(137, 0);
  Graph g = random_graph(6, 3, rng);
  GcnModel m = random_conv_model(3, {4, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(6, 0), 1};
  auto dist = PerturbationDistribution::parse("ux:0.3+ua:0.4");

  KecModel kec = kec_solve(m, g, qoi, dist, 100, 3);
  RandomStream sampler(139, 0);
  for (int s = 0; s < 10; ++s) {
    Perturbation p = sample(dist, g, sampler);
    Graph gp;
    gp.x = g.x - p.eps_x;
    gp.a = (g.a - p.eps_a).cwiseMax(0.0);
    const double direct = kec_evaluate(kec, g) - kec_evaluate(kec, gp);
    Vector phi = kec_phi(kec, g, p);
    double via_phi = 0.0;
    for (int k = 0; k < kec.order; ++k) {
      via_phi += phi.segment(k * 3, 3).dot(kec.w[k]);
    }
    CHECK(direct == doctest::Approx(via_phi).epsilon(1e-10));
  }
}

TEST_CASE("kec_attribute matches finite differences of the surrogate") {
  RandomStream rng(149, 0);
  Graph g = random_graph(5, 2, rng);
  GcnModel m = random_conv_model(2, {3, 2}, true, rng);
  QuantityOfInterest qoi{NodeSelector::one_hot(5, 1), 0};
  auto dist = PerturbationDistribution::parse("ux:0.3+ua:0.4");

  KecModel kec = kec_solve(m, g, qoi, dist, 80, 9);
  Attribution attr = kec_attribute(kec, g);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) {
      Graph up = g, down = g;
      up.x(i, j) += h;
      down.x(i, j) -= h;
      const double fd = (kec_evaluate(kec, up) - kec_evaluate(kec, down)) / (2.0 * h);
      CHECK(rel_err(attr.phi_x(i, j), fd, 1e-7) < 1e-4);
    }
    for (int j = 0; j < 5; ++j) {
      if (i != j && g.a(i, j) == 0.0) {
        CHECK(attr.phi_a(i, j) == 0.0);
        continue;
      }
      Graph up = g, down = g;
      up.a(i, j) += h;
      down.a(i, j) -= h;
      const double fd = (kec_evaluate(kec, up) - kec_evaluate(kec, down)) / (2.0 * h);
      CHECK(rel_err(attr.phi_a(i, j), fd, 1e-7) < 1e-4);
    }
  }
}

TEST_CASE("soft mask stays inside the computation graph") {
  RandomStream rng(151, 0);
  Graph g = random_graph(10, 3, rng, 0.25);
  GcnModel m = random_conv_model(3, {4, 3}, true, rng);
  const int v = 0;

  SoftMaskConfig cfg;
  cfg.epochs = 30;
  SoftMask mask = softmask_explain(m, g, v, cfg);

  std::vector<int> scope = khop_nodes(g, v, 2);
  std::vector<char> in_scope(10, 0);
  for (int u : scope) in_scope[u] = 1;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (g.a(i, j) != 0.0 && in_scope[i] && in_scope[j]) {
        CHECK(mask.edge_mask(i, j) > 0.0);
        CHECK(mask.edge_mask(i, j) < 1.0);
      } else {
        CHECK(mask.edge_mask(i, j) == 1.0);
      }
    }
    for (int j = 0; j < 3; ++j) {
      if (!in_scope[i]) CHECK(mask.feature_mask(i, j) == 1.0);
      CHECK(mask.feature_mask(i, j) >= 0.0);
      CHECK(mask.feature_mask(i, j) <= 1.0);
    }
  }
}

TEST_CASE("hardening thresholds edges and keeps features soft") {
  RandomStream rng(157, 0);
  Graph g = random_graph(8, 2, rng);
  GcnModel m = random_conv_model(2, {3, 2}, true, rng);
  SoftMaskConfig cfg;
  cfg.epochs = 30;
  SoftMask mask = softmask_explain(m, g, 1, cfg);

  SubgraphExplanation hard = harden(mask, g);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (g.a(i, j) == 0.0) {
        CHECK(hard.as(i, j) == 0.0);
      } else if (mask.edge_mask(i, j) >= 0.5) {
        CHECK(hard.as(i, j) == g.a(i, j));
      } else {
        CHECK(hard.as(i, j) == 0.0);
      }
    }
  }
  CHECK((hard.xs - g.x.cwiseProduct(mask.feature_mask)).norm() == 0.0);

  SubgraphExplanation soft = soften(mask, g);
  CHECK((soft.as - g.a.cwiseProduct(mask.edge_mask)).norm() == 0.0);
}

TEST_CASE("softmask attribution scores are non-negative") {
  RandomStream rng(163, 0);
  Graph g = random_graph(8, 2, rng);
  GcnModel m = random_conv_model(2, {3, 2}, true, rng);
  SoftMaskConfig cfg;
  cfg.epochs = 20;
  SoftMask mask = softmask_explain(m, g, 2, cfg);
  Attribution attr = softmask_attribution(mask, g);
  CHECK(attr.phi_a.minCoeff() >= 0.0);
  CHECK(attr.phi_x.minCoeff() >= 0.0);
}

TEST_CASE("scatter_attribution maps local scores to global coordinates") {
  RandomStream rng(167, 0);
  Graph g = random_graph(9, 2, rng, 0.3);
  KhopSubgraph sub = extract_khop(g, 4, 1);
  const int m = static_cast<int>(sub.nodes.size());

  Attribution local;
  local.phi_x = Matrix::Random(m, 2);
  local.phi_a = Matrix::Random(m, m);
  Attribution global = scatter_attribution(local, sub, 9, 2);
  for (int i = 0; i < m; ++i) {
    CHECK((global.phi_x.row(sub.nodes[i]) - local.phi_x.row(i)).norm() == 0.0);
    for (int j = 0; j < m; ++j) {
      CHECK(global.phi_a(sub.nodes[i], sub.nodes[j]) == local.phi_a(i, j));
    }
  }
  CHECK(global.phi_x.cwiseAbs().sum() == doctest::Approx(local.phi_x.cwiseAbs().sum()));
}
