#pragma once

#include <string>
#include <vector>

#include "gef/gcn.hpp"
#include "gef/graph.hpp"
#include "gef/numerics.hpp"
#include "gef/perturb.hpp"

namespace gef {

// Per-entry influence scores, interpretable as the weights of a linear
// difference model. phi_a is kept zero outside supp(A) + diagonal.
struct Attribution {
  Matrix phi_x;  // n x d
  Matrix phi_a;  // n x n
  std::string method;
  std::string baseline;
  int sample_count = 0;
  std::uint64_t seed = 0;
};

Attribution saliency(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi);

enum class IgBaseline { Zero, Random, Input };

// Expected gradient along the straight line from a baseline to the input.
// The average gradient is used directly as linear-model weights; it is not
// multiplied by (input - baseline).
Attribution integrated_gradients(const GcnModel& m, const Graph& g,
                                 const QuantityOfInterest& qoi,
                                 IgBaseline baseline = IgBaseline::Zero, int steps = 50,
                                 std::uint64_t seed = 0);

// Optimal linear difference model over the perturbable coordinates of the
// chosen distribution, solved from streamed sample moments by truncated
// pseudo-inverse.
Attribution linear_optimal(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
                           const PerturbationDistribution& dist, int n_samples = 200,
                           std::uint64_t seed = 0, const TruncatedSvdConfig& cfg = {});

// Degree-M polynomial surrogate p(X, A) = sum_k e^T N(A^k) X w_k.
struct KecModel {
  int order = 0;
  std::vector<Vector> w;  // M weight vectors of length d
  NodeSelector selector;
  int sample_count = 0;
  int discarded_singular_values = 0;
};

// Closed-form fit of the surrogate weights that minimize the empirical
// unfaithfulness on the solver sample stream. The surrogate order equals the
// model's number of conv layers.
KecModel kec_solve(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
                   const PerturbationDistribution& dist, int n_samples = 200,
                   std::uint64_t seed = 0, const TruncatedSvdConfig& cfg = {});

// p(X, A) for a solved surrogate.
double kec_evaluate(const KecModel& kec, const Graph& g);

// Gradients of the surrogate w.r.t. X and A (through matrix powers and
// normalization), reported as influence scores.
Attribution kec_attribute(const KecModel& kec, const Graph& g);

// Per-sample feature vector [tau_1; ...; tau_M] of the surrogate fit;
// exposed for oracle-style verification of the closed-form solution.
Vector kec_phi(const KecModel& kec, const Graph& g, const Perturbation& p);

struct SoftMaskConfig {
  int epochs = 100;
  double lr = 0.01;
  double edge_reg = 0.005;
  double feat_reg = 1.0;
  double entropy_reg = 0.1;
  std::uint64_t seed = 0;
};

// Relaxed edge/feature masks from gradient descent on the masked-prediction
// objective. Only entries inside the node's computation graph are optimized;
// everything else stays at mask value 1.
struct SoftMask {
  Matrix feature_mask;  // n x d in [0, 1]
  Matrix edge_mask;     // n x n in (0, 1] on supp(A), 1 elsewhere inside, 1 outside
  int node = -1;
  int target_class = -1;
  double final_loss = 0.0;
};

SoftMask softmask_explain(const GcnModel& m, const Graph& g, int v,
                          const SoftMaskConfig& cfg = {});

// Masked graph pair acting as a nonlinear difference model.
struct SubgraphExplanation {
  Matrix xs;  // n x d
  Matrix as;  // n x n, supp(as) within supp(a)
  double threshold = 0.0;
};

// Threshold the edge mask into a discrete subgraph; the feature mask stays
// soft.
SubgraphExplanation harden(const SoftMask& mask, const Graph& g, double threshold = 0.5);

// Keep both masks soft (the "soft" variant skips hardening entirely).
SubgraphExplanation soften(const SoftMask& mask, const Graph& g);

// Edge-importance scores of a soft mask as an Attribution (scores are the
// sigmoid mask values; sign information is lost by construction).
Attribution softmask_attribution(const SoftMask& mask, const Graph& g);

// Scatter an attribution computed on an extracted k-hop subgraph back to
// full-graph coordinates.
Attribution scatter_attribution(const Attribution& local, const KhopSubgraph& sub,
                                int n, int d);

// Zero phi_a outside supp(A) + diagonal.
void restrict_to_perturbable(Attribution& attr, const Graph& g);

}  // namespace gef
