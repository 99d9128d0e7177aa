#pragma once

#include <string>
#include <vector>

#include "gef/explain.hpp"
#include "gef/gcn.hpp"
#include "gef/perturb.hpp"

namespace gef {

// Pluggable local difference model p(X, A). The evaluator compares the
// first-order differences of p against those of the target model under
// shared perturbations.
struct DifferenceModel {
  enum class Kind { Linear, Kec, Subgraph };
  Kind kind = Kind::Linear;
  Attribution attr;        // Linear
  KecModel kec;            // Kec
  SubgraphExplanation sub; // Subgraph

  static DifferenceModel linear(Attribution a);
  static DifferenceModel from_kec(KecModel k);
  static DifferenceModel subgraph(SubgraphExplanation s);
};

struct FaithfulnessReport {
  double delta = 0.0;  // mean squared residual, >= 0
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::string dist;
  std::vector<double> residuals;  // retained only in verbose mode
};

// Monte-Carlo general unfaithfulness over the evaluation stream. Two calls
// with equal (seed, node, dist, n_samples) consume identical samples
// regardless of the difference-model kind.
FaithfulnessReport evaluate(const DifferenceModel& p, const GcnModel& m, const Graph& g,
                            const QuantityOfInterest& qoi, const PerturbationDistribution& dist,
                            int n_samples = 500, std::uint64_t seed = 0, bool verbose = false);

// Jensen lower bound for subgraph difference models on the matched sample
// set: [C + mean F(X-eps) - mean F(X_s-eps)]^2 with C = F(X_s,A_s) - F(X,A).
double subgraph_lower_bound(const SubgraphExplanation& sub, const GcnModel& m, const Graph& g,
                            const QuantityOfInterest& qoi, const PerturbationDistribution& dist,
                            int n_samples, std::uint64_t seed);

}  // namespace gef
