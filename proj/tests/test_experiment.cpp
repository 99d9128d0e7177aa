#include "doctest.h"

#include "gef/datasets.hpp"
#include "gef/experiment.hpp"
#include "helpers.hpp"

using namespace gef;
using namespace gef::testhelp;

TEST_CASE("roc_auc on hand-ranked inputs") {
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == doctest::Approx(0.0));
  CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}) == doctest::Approx(0.5));
  CHECK(roc_auc({0.9, 0.4, 0.6, 0.1}, {1, 0, 1, 0}) == doctest::Approx(1.0));
  // One misranked pair out of four: AUC 3/4.
  CHECK(roc_auc({0.9, 0.3, 0.5, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS((void)roc_auc({0.1, 0.2}, {1, 1}), ContractError);
  CHECK_THROWS_AS((void)roc_auc({0.1}, {1, 0}), ContractError);
}

TEST_CASE("roc_auc_edges zeroes tiny scores and averages the temperature grid") {
  Attribution attr;
  attr.phi_x = Matrix::Zero(3, 1);
  attr.phi_a = Matrix::Zero(3, 3);
  attr.phi_a(0, 1) = 0.8;
  attr.phi_a(1, 2) = -0.6;   // magnitude ranks second
  attr.phi_a(2, 0) = 1e-5;   // below the threshold: treated as zero
  std::vector<std::pair<std::pair<int, int>, int>> labels = {
      {{0, 1}, 1}, {{1, 2}, 1}, {{2, 0}, 0}};
  CHECK(roc_auc_edges(attr, labels) == doctest::Approx(1.0));

  // Flipping the labels inverts the ranking.
  labels = {{{0, 1}, 0}, {{1, 2}, 0}, {{2, 0}, 1}};
  CHECK(roc_auc_edges(attr, labels) == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)roc_auc_edges(attr, {}), ContractError);
}

TEST_CASE("sparsity_auc matches the two-score hand example") {
  Attribution attr;
  attr.phi_x = Matrix::Zero(2, 1);
  attr.phi_a = Matrix::Zero(2, 2);
  attr.phi_a(0, 1) = 1.0;
  attr.phi_a(1, 0) = 0.5;
  // Normalized scores {1, 0.5}: kept fraction is 1 until 0.5, then 1/2 until
  // 1, so the area is 0.75.
  CHECK(sparsity_auc(attr) == doctest::Approx(0.75).epsilon(0.01));

  Attribution empty;
  empty.phi_x = Matrix::Zero(2, 1);
  empty.phi_a = Matrix::Zero(2, 2);
  CHECK_THROWS_AS((void)sparsity_auc(empty), ContractError);
}

TEST_CASE("node slices parse and expand") {
  NodeSlice s = NodeSlice::parse("0:50:5");
  CHECK(s.start == 0);
  CHECK(s.stop == 50);
  CHECK(s.step == 5);
  CHECK(s.to_string() == "0:50:5");
  CHECK(s.expand(100).size() == 10);
  CHECK(s.expand(23) == std::vector<int>{0, 5, 10, 15, 20});
  CHECK_THROWS_AS(NodeSlice::parse("5"), ContractError);
  CHECK_THROWS_AS(NodeSlice::parse("5:2:1"), ContractError);
  CHECK_THROWS_AS(NodeSlice::parse("0:10:0"), ContractError);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::Sm, Method::IgZero, Method::IgRandom, Method::Linear, Method::Kec,
                   Method::GnnexplSoft, Method::Gnnexpl}) {
    CHECK(method_from_name(method_name(m)) == m);
  }
  CHECK(parse_methods("sm,kec").size() == 2);
  CHECK_THROWS_AS(method_from_name("nope"), ContractError);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
  // Monotone but nonlinear is still rank-perfect.
  CHECK(spearman({1, 2, 3, 4}, {1, 8, 27, 64}) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)spearman({1, 1, 1}, {1, 2, 3}), ContractError);
  CHECK_THROWS_AS((void)spearman({1}, {1}), ContractError);
}

TEST_CASE("run_experiment is deterministic and thread-count independent") {
  Graph g = gen_citation_style(50, 4, 3, 2);
  RandomStream rng(201, 0);
  GcnModel m = GcnModel::citation_preset(4, 3, 6, rng);

  ExperimentSpec spec;
  spec.nodes = NodeSlice{0, 12, 3};
  spec.methods = {Method::Sm, Method::Kec};
  spec.dists = {PerturbationDistribution::parse("ua:0.5")};
  spec.n_solve = 40;
  spec.n_eval = 60;
  spec.seed = 5;

  ExperimentResult serial = run_experiment(m, g, spec);
  spec.jobs = 4;
  ExperimentResult parallel = run_experiment(m, g, spec);

  REQUIRE(serial.rows.size() == parallel.rows.size());
  REQUIRE(serial.rows.size() == 8);  // 4 nodes x 2 methods
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].node == parallel.rows[i].node);
    CHECK(serial.rows[i].method == parallel.rows[i].method);
    CHECK(serial.rows[i].delta == parallel.rows[i].delta);
    CHECK(serial.rows[i].error.empty());
  }
  CHECK(serial.aggregate == parallel.aggregate);
  CHECK(serial.aggregate.size() == 2);
  CHECK_FALSE(serial.table().empty());
}

TEST_CASE("checkpoint_sweep requires two checkpoints and reports per-epoch rows") {
  Graph g = gen_citation_style(40, 3, 2, 4);
  RandomStream rng(203, 0);
  GcnModel m = GcnModel::citation_preset(3, 2, 5, rng);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.checkpoint_every = 15;
  TrainResult trained = train(m, g, cfg);
  REQUIRE(trained.checkpoints.size() >= 2);

  ExperimentSpec spec;
  spec.nodes = NodeSlice{0, 8, 2};
  spec.methods = {Method::Sm};
  spec.dists = {PerturbationDistribution::parse("ua:0.5")};
  spec.n_eval = 40;
  spec.seed = 1;

  std::vector<SweepRow> sweep = checkpoint_sweep(trained.checkpoints, g, spec);
  CHECK(sweep.size() == trained.checkpoints.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    CHECK(sweep[i].epoch == trained.checkpoints[i].epoch);
    CHECK(sweep[i].mean_delta.count("sm") == 1);
    CHECK(sweep[i].mean_quality.count("sm") == 1);
  }

  std::vector<Checkpoint> single(trained.checkpoints.begin(), trained.checkpoints.begin() + 1);
  CHECK_THROWS_AS((void)checkpoint_sweep(single, g, spec), ContractError);
}
