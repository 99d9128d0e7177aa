#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gef/explain.hpp"
#include "gef/faithfulness.hpp"
#include "gef/gcn.hpp"

namespace gef {

struct RocAucConfig {
  double abs_threshold = 1e-3;
  std::vector<double> temperatures;  // defaults to a log grid 1e-18 .. 1e5

  static std::vector<double> default_temperature_grid();
  const std::vector<double>& grid() const;
};

// Rank-based AUC with tie handling; throws if all labels are identical.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean ROC-AUC over the temperature grid after zeroing tiny |phi_a| scores
// and mapping them through a numerically safe temperature sigmoid.
double roc_auc_edges(const Attribution& attr,
                     const std::vector<std::pair<std::pair<int, int>, int>>& edge_labels,
                     const RocAucConfig& cfg = {});

// Area under the kept-edge-fraction curve as the normalized score threshold
// sweeps 0 -> 1.
double sparsity_auc(const Attribution& attr, int grid_points = 101);

struct NodeSlice {
  int start = 0;
  int stop = 0;
  int step = 1;

  static NodeSlice parse(const std::string& spec);  // "start:stop:step"
  std::vector<int> expand(int n) const;
  std::string to_string() const;
};

enum class Method { Sm, IgZero, IgRandom, Linear, Kec, GnnexplSoft, Gnnexpl };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::vector<Method> parse_methods(const std::string& comma_list);

struct ExperimentSpec {
  NodeSlice nodes;
  std::vector<Method> methods;
  std::vector<PerturbationDistribution> dists;
  int n_solve = 200;
  int n_eval = 500;
  std::uint64_t seed = 0;
  int jobs = 1;
  SoftMaskConfig softmask;
  TruncatedSvdConfig svd;
};

struct ResultRow {
  int node = -1;
  std::string method;
  std::string dist;
  int n_samples = 0;
  double delta = 0.0;
  double explain_seconds = 0.0;
  std::string error;  // empty on success
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  // mean delta per (method, dist) over successful rows
  std::map<std::pair<std::string, std::string>, double> aggregate;

  void recompute_aggregate();
  std::string table() const;
};

// Per-node faithfulness protocol: extract the computation subgraph, run each
// method, score each (method, dist) pair on the shared evaluation stream.
// Per-node failures are recorded as rows with a non-empty error.
ExperimentResult run_experiment(const GcnModel& m, const Graph& g, const ExperimentSpec& spec);

struct SweepRow {
  int epoch = 0;
  double test_accuracy = 0.0;
  std::map<std::string, double> mean_delta;      // method -> mean delta
  std::map<std::string, double> mean_quality;    // method -> mean ROC-AUC or sparsity AUC
};

// Parameter-faithfulness sweep over training checkpoints. When edge labels
// are given the quality column is edge ROC-AUC, otherwise sparsity AUC.
std::vector<SweepRow> checkpoint_sweep(const std::vector<Checkpoint>& checkpoints,
                                       const Graph& g, const ExperimentSpec& spec,
                                       const Matrix* edge_labels = nullptr,
                                       const RocAucConfig& roc_cfg = {});

double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace gef
