#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gef/graph.hpp"
#include "gef/rng.hpp"

namespace gef {

// Perturbation distribution over node features and/or edge weights. Perturbed
// graphs are always evaluated as (X - eps_x, A - eps_a); clipping of edge
// weights at zero is folded into eps_a so that A - eps_a is exactly the
// clipped graph. The perturbable edge set is supp(A) plus the diagonal
// (self-loops); absent off-diagonal edges are never perturbed.
struct PerturbationDistribution {
  enum class Kind { UniformX, UniformA, BernoulliA };
  struct Component {
    Kind kind;
    double sigma;  // in (0, 1]
  };
  std::vector<Component> components;

  bool perturbs_x() const;
  bool perturbs_a() const;
  void validate() const;

  // Mini-grammar: "ux:0.2", "ua:0.5", "ba:0.5", and products like
  // "ux:0.5+ua:0.5".
  static PerturbationDistribution parse(const std::string& spec);
  std::string to_string() const;
};

struct Perturbation {
  Matrix eps_x;  // n x d, zero when only edges are perturbed
  Matrix eps_a;  // n x n, zero outside supp(A) + diagonal
};

// Entries of supp(A) plus all diagonal entries, row-major order.
std::vector<std::pair<int, int>> perturbable_entries(const Graph& g);

Perturbation sample(const PerturbationDistribution& dist, const Graph& g, RandomStream& rng);

std::vector<Perturbation> sample_batch(const PerturbationDistribution& dist, const Graph& g,
                                       std::uint64_t master_seed, int node_id, int count,
                                       StreamPurpose purpose = StreamPurpose::Eval);

}  // namespace gef
