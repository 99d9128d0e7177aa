#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "gef/datasets.hpp"
#include "gef/io.hpp"
#include "helpers.hpp"

using namespace gef;
using namespace gef::testhelp;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("gef-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("graph JSON round trip is exact") {
  TempDir dir;
  Graph g = gen_citation_style(30, 4, 3, 7);
  save_graph(g, dir.file("g.json"));
  Graph back = load_graph(dir.file("g.json"));

  CHECK((g.x - back.x).norm() == 0.0);
  CHECK((g.a - back.a).norm() == 0.0);
  CHECK(g.labels == back.labels);
  CHECK(g.train_mask == back.train_mask);
  CHECK(g.val_mask == back.val_mask);
  CHECK(g.test_mask == back.test_mask);
}

TEST_CASE("graph loader rejects malformed input") {
  TempDir dir;
  CHECK_THROWS_AS((void)load_graph(dir.file("missing.json")), IoError);
  {
    std::ofstream out(dir.file("bad.json"));
    out << "{ not json";
  }
  CHECK_THROWS_AS((void)load_graph(dir.file("bad.json")), IoError);
  {
    std::ofstream out(dir.file("range.json"));
    out << R"({"n":2,"d":1,"x":[[0],[0]],"edges":[[0,5,1.0]]})";
  }
  CHECK_THROWS_AS((void)load_graph(dir.file("range.json")), IoError);
}

TEST_CASE("checkpoint round trip preserves the forward pass to 1e-12") {
  TempDir dir;
  Graph g = gen_citation_style(25, 3, 2, 9);
  RandomStream rng(211, 0);
  GcnModel m = GcnModel::ba_shapes_preset(3, 2, 5, rng);

  Checkpoint ck;
  ck.epoch = 42;
  ck.test_accuracy = 0.5;
  ck.model = m;
  save_checkpoint(ck, dir.file("ck.json"));
  Checkpoint back = load_checkpoint(dir.file("ck.json"));

  CHECK(back.epoch == 42);
  CHECK(back.test_accuracy == doctest::Approx(0.5));
  CHECK((forward_all(m, g) - forward_all(back.model, g)).norm() < 1e-12);

  save_checkpoints({ck, back}, dir.file("list.json"));
  auto list = load_checkpoints(dir.file("list.json"));
  CHECK(list.size() == 2);
  CHECK((forward_all(list[1].model, g) - forward_all(m, g)).norm() < 1e-12);
}

TEST_CASE("attribution JSON round trip keeps the sparse edge scores") {
  TempDir dir;
  RandomStream rng(223, 0);
  Graph g = random_graph(6, 2, rng);
  Attribution attr;
  attr.method = "kec";
  attr.sample_count = 17;
  attr.seed = 9;
  attr.phi_x = Matrix::Random(6, 2);
  attr.phi_a = Matrix::Zero(6, 6);
  attr.phi_a(0, 1) = 0.25;
  attr.phi_a(3, 3) = -1.5;

  save_attribution(attr, dir.file("attr.json"));
  Attribution back = load_attribution(dir.file("attr.json"));
  CHECK(back.method == "kec");
  CHECK(back.sample_count == 17);
  CHECK((attr.phi_x - back.phi_x).norm() == 0.0);
  CHECK((attr.phi_a - back.phi_a).norm() == 0.0);
}

TEST_CASE("DOT export uses the blue/red sign convention") {
  RandomStream rng(227, 0);
  Graph g = random_graph(5, 2, rng);
  Attribution attr;
  attr.phi_x = Matrix::Zero(5, 2);
  attr.phi_a = Matrix::Zero(5, 5);
  bool pos_done = false;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (g.a(i, j) != 0.0) {
        attr.phi_a(i, j) = pos_done ? -0.7 : 0.9;
        pos_done = true;
      }
    }
  }
  std::string dot = attribution_dot(attr, g);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("#0000ff") != std::string::npos);
  CHECK(dot.find("#ff0000") != std::string::npos);
  CHECK(dot.find("penwidth") != std::string::npos);
}

TEST_CASE("sensor series round trip") {
  TempDir dir;
  SensorSeries series = gen_sensor_data(5, 6, 40);
  inject_attack(series, AttackKind::ZeroClamp, 1, 20, 5);
  save_sensor_series(series, dir.file("s.json"));
  SensorSeries back = load_sensor_series(dir.file("s.json"));

  CHECK((series.readings - back.readings).norm() == 0.0);
  CHECK((series.topology.a - back.topology.a).norm() == 0.0);
  CHECK(series.attack == back.attack);
  CHECK(series.attacked_node == back.attacked_node);
}

TEST_CASE("result and sweep exports are well-formed") {
  TempDir dir;
  ExperimentResult result;
  result.rows.push_back({3, "sm", "ua:0.5", 100, 0.25, 0.01, ""});
  result.rows.push_back({4, "sm", "ua:0.5", 100, 0.35, 0.01, ""});
  result.rows.push_back({5, "kec", "ua:0.5", 100, 0.0, 0.02, "softmask failed"});
  result.recompute_aggregate();
  CHECK(result.aggregate.at({"sm", "ua:0.5"}) == doctest::Approx(0.3));
  CHECK(result.aggregate.count({"kec", "ua:0.5"}) == 0);  // errored rows excluded
  save_result(result, dir.file("result.json"));
  CHECK(std::filesystem::file_size(dir.file("result.json")) > 0);

  SweepRow row;
  row.epoch = 10;
  row.test_accuracy = 0.8;
  row.mean_delta["sm"] = 0.5;
  row.mean_quality["sm"] = 0.9;
  std::string csv = sweep_csv({row});
  CHECK(csv.find("epoch,test_accuracy,delta_sm,quality_sm") == 0);
  CHECK(csv.find("10,0.8,0.5,0.9") != std::string::npos);
}
