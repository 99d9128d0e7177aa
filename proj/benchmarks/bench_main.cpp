#include <benchmark/benchmark.h>

#include "gef/datasets.hpp"
#include "gef/explain.hpp"
#include "gef/faithfulness.hpp"

namespace {

using namespace gef;

struct Fixture {
  Graph g;
  GcnModel m;
  QuantityOfInterest qoi;
  PerturbationDistribution dist;

  Fixture() : dist(PerturbationDistribution::parse("ua:0.5")) {
    g = gen_citation_style(150, 10, 4, 11);
    RandomStream rng(7, 0);
    m = GcnModel::citation_preset(10, 4, 16, rng);
    qoi = QuantityOfInterest{NodeSelector::one_hot(150, 3), 0};
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_Forward(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(f.m, f.g, f.qoi));
  }
}
BENCHMARK(BM_Forward);

void BM_GradInput(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_input(f.m, f.g, f.qoi));
  }
}
BENCHMARK(BM_GradInput);

void BM_KecSolve(benchmark::State& state) {
  auto& f = fixture();
  const int n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kec_solve(f.m, f.g, f.qoi, f.dist, n_samples, 5));
  }
  state.SetComplexityN(n_samples);
}
BENCHMARK(BM_KecSolve)->Arg(50)->Arg(200)->Arg(800);

void BM_Evaluate(benchmark::State& state) {
  auto& f = fixture();
  Attribution attr = saliency(f.m, f.g, f.qoi);
  DifferenceModel dm = DifferenceModel::linear(attr);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(dm, f.m, f.g, f.qoi, f.dist, 100, 3));
  }
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
