#include "gef/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

namespace gef {

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}


}  // namespace

std::vector<double> RocAucConfig::default_temperature_grid() {
  std::vector<double> grid;
  for (int p = -18; p <= 5; ++p) grid.push_back(std::pow(10.0, p));
  return grid;
}

const std::vector<double>& RocAucConfig::grid() const {
  static const std::vector<double> fallback = default_temperature_grid();
  return temperatures.empty() ? fallback : temperatures;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ContractError("roc_auc: size mismatch or empty input");
  }
  long npos = std::count(labels.begin(), labels.end(), 1);
  long nneg = static_cast<long>(labels.size()) - npos;
  if (npos == 0 || nneg == 0) throw ContractError("roc_auc: labels are all identical");
  std::vector<double> ranks = ranks_with_ties(scores);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) pos_rank_sum += ranks[i];
  }
  const double np = static_cast<double>(npos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(nneg));
}

double roc_auc_edges(const Attribution& attr,
                     const std::vector<std::pair<std::pair<int, int>, int>>& edge_labels,
                     const RocAucConfig& cfg) {
  if (cfg.abs_threshold <= 0.0) throw ContractError("roc_auc_edges: threshold must be > 0");
  if (edge_labels.empty()) throw ContractError("roc_auc_edges: no labeled edges");
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(edge_labels.size());
  labels.reserve(edge_labels.size());
  for (const auto& [edge, label] : edge_labels) {
    double s = std::abs(attr.phi_a(edge.first, edge.second));
    if (s < cfg.abs_threshold) s = 0.0;
    scores.push_back(s);
    labels.push_back(label);
  }
  double sum = 0.0;
  const auto& grid = cfg.grid();
  std::vector<double> probs(scores.size());
  for (double t : grid) {
    // AUC is a rank statistic and the sigmoid is strictly increasing, so the
    // numerically-safe evaluation ranks on the log-odds score/t directly:
    // identical ordering to 1/(1+exp(-score/t)) without the floating-point
    // saturation that would collapse distinct scores into ties at tiny t.
    for (std::size_t i = 0; i < scores.size(); ++i) probs[i] = scores[i] / t;
    sum += roc_auc(probs, labels);
  }
  return sum / static_cast<double>(grid.size());
}

double sparsity_auc(const Attribution& attr, int grid_points) {
  if (grid_points < 2) throw ContractError("sparsity_auc: need at least 2 grid points");
  std::vector<double> scores;
  for (Eigen::Index i = 0; i < attr.phi_a.rows(); ++i) {
    for (Eigen::Index j = 0; j < attr.phi_a.cols(); ++j) {
      if (attr.phi_a(i, j) != 0.0) scores.push_back(attr.phi_a(i, j));
    }
  }
  if (scores.empty()) throw ContractError("sparsity_auc: all edge scores are zero");
  double max_abs = 0.0;
  for (double s : scores) max_abs = std::max(max_abs, std::abs(s));
  for (double& s : scores) s /= max_abs;

  double area = 0.0;
  double prev = 0.0, prev_t = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(grid_points - 1);
    long kept = std::count_if(scores.begin(), scores.end(), [t](double s) { return s > t; });
    const double frac = static_cast<double>(kept) / static_cast<double>(scores.size());
    if (k > 0) area += 0.5 * (frac + prev) * (t - prev_t);
    prev = frac;
    prev_t = t;
  }
  return area;
}

NodeSlice NodeSlice::parse(const std::string& spec) {
  NodeSlice s;
  if (std::sscanf(spec.c_str(), "%d:%d:%d", &s.start, &s.stop, &s.step) != 3) {
    throw ContractError("node slice: expected start:stop:step, got '" + spec + "'");
  }
  if (s.step < 1 || s.start < 0 || s.stop <= s.start) {
    throw ContractError("node slice: invalid range '" + spec + "'");
  }
  return s;
}

std::vector<int> NodeSlice::expand(int n) const {
  std::vector<int> nodes;
  for (int v = start; v < stop && v < n; v += step) nodes.push_back(v);
  if (nodes.empty()) throw ContractError("node slice: empty after clipping to graph");
  return nodes;
}

std::string NodeSlice::to_string() const {
  std::ostringstream out;
  out << start << ':' << stop << ':' << step;
  return out.str();
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Sm: return "sm";
    case Method::IgZero: return "ig-zero";
    case Method::IgRandom: return "ig-random";
    case Method::Linear: return "linear";
    case Method::Kec: return "kec";
    case Method::GnnexplSoft: return "gnnexpl-soft";
    case Method::Gnnexpl: return "gnnexpl";
  }
  throw ContractError("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "sm") return Method::Sm;
  if (name == "ig-zero" || name == "ig") return Method::IgZero;
  if (name == "ig-random") return Method::IgRandom;
  if (name == "linear") return Method::Linear;
  if (name == "kec") return Method::Kec;
  if (name == "gnnexpl-soft") return Method::GnnexplSoft;
  if (name == "gnnexpl") return Method::Gnnexpl;
  throw ContractError("unknown method '" + name + "'");
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> methods;
  std::stringstream ss(comma_list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) methods.push_back(method_from_name(token));
  }
  if (methods.empty()) throw ContractError("no methods given");
  return methods;
}

namespace {

struct NodeOutput {
  std::vector<ResultRow> rows;
  std::map<std::string, Attribution> attributions;  // global coordinates
};

bool is_solver_method(Method m) { return m == Method::Linear || m == Method::Kec; }

NodeOutput process_node(const GcnModel& model, const Graph& g, int v,
                        const ExperimentSpec& spec) {
  using Clock = std::chrono::steady_clock;
  NodeOutput out;
  const int hops = std::max(1, model.num_conv_layers());
  KhopSubgraph sub = extract_khop(g, v, hops);
  const int lv = sub.local_of(v);
  QuantityOfInterest qoi{NodeSelector::one_hot(sub.graph.num_nodes(), lv),
                         predict_class(model, sub.graph, lv)};
  const std::uint64_t op_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(v));

  const bool wants_soft =
      std::find(spec.methods.begin(), spec.methods.end(), Method::GnnexplSoft) != spec.methods.end();
  const bool wants_hard =
      std::find(spec.methods.begin(), spec.methods.end(), Method::Gnnexpl) != spec.methods.end();
  SoftMask mask;
  double mask_seconds = 0.0;
  bool mask_ready = false;
  std::string mask_error;
  if (wants_soft || wants_hard) {
    try {
      SoftMaskConfig cfg = spec.softmask;
      cfg.seed = op_seed;
      const auto t0 = Clock::now();
      mask = softmask_explain(model, sub.graph, lv, cfg);
      mask_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      mask_ready = true;
    } catch (const std::exception& ex) {
      mask_error = ex.what();
    }
  }

  for (Method method : spec.methods) {
    // Dist-independent explanations are computed once per node.
    Attribution attr;
    DifferenceModel dm;
    double seconds = 0.0;
    std::string error;
    bool ready = false;

    auto build_static = [&]() {
      const auto t0 = Clock::now();
      switch (method) {
        case Method::Sm:
          attr = saliency(model, sub.graph, qoi);
          dm = DifferenceModel::linear(attr);
          break;
        case Method::IgZero:
          attr = integrated_gradients(model, sub.graph, qoi, IgBaseline::Zero, 50, op_seed);
          dm = DifferenceModel::linear(attr);
          break;
        case Method::IgRandom:
          attr = integrated_gradients(model, sub.graph, qoi, IgBaseline::Random, 50, op_seed);
          dm = DifferenceModel::linear(attr);
          break;
        case Method::GnnexplSoft:
          if (!mask_ready) throw NumericalError("soft mask failed: " + mask_error);
          attr = softmask_attribution(mask, sub.graph);
          dm = DifferenceModel::subgraph(soften(mask, sub.graph));
          break;
        case Method::Gnnexpl:
          if (!mask_ready) throw NumericalError("soft mask failed: " + mask_error);
          attr = softmask_attribution(mask, sub.graph);
          dm = DifferenceModel::subgraph(harden(mask, sub.graph));
          break;
        default:
          break;
      }
      seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      if (method == Method::GnnexplSoft || method == Method::Gnnexpl) seconds += mask_seconds;
      ready = true;
    };

    if (!is_solver_method(method)) {
      try {
        build_static();
      } catch (const std::exception& ex) {
        error = ex.what();
      }
    }

    bool attribution_recorded = false;
    for (const auto& dist : spec.dists) {
      ResultRow row;
      row.node = v;
      row.method = method_name(method);
      row.dist = dist.to_string();
      row.n_samples = spec.n_eval;
      try {
        if (is_solver_method(method)) {
          const auto t0 = Clock::now();
          if (method == Method::Linear) {
            attr = linear_optimal(model, sub.graph, qoi, dist, spec.n_solve, op_seed, spec.svd);
            dm = DifferenceModel::linear(attr);
          } else {
            KecModel kec = kec_solve(model, sub.graph, qoi, dist, spec.n_solve, op_seed, spec.svd);
            attr = kec_attribute(kec, sub.graph);
            dm = DifferenceModel::from_kec(std::move(kec));
          }
          seconds = std::chrono::duration<double>(Clock::now() - t0).count();
          ready = true;
        } else if (!ready) {
          throw NumericalError(error.empty() ? "explanation unavailable" : error);
        }
        FaithfulnessReport report =
            evaluate(dm, model, sub.graph, qoi, dist, spec.n_eval, op_seed);
        row.delta = report.delta;
        row.explain_seconds = seconds;
        if (!attribution_recorded) {
          out.attributions[row.method] =
              scatter_attribution(attr, sub, g.num_nodes(), g.num_features());
          attribution_recorded = true;
        }
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<NodeOutput> process_all_nodes(const GcnModel& model, const Graph& g,
                                          const ExperimentSpec& spec,
                                          const std::vector<int>& nodes) {
  std::vector<NodeOutput> outputs(nodes.size());
  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      outputs[i] = process_node(model, g, nodes[i], spec);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= nodes.size()) break;
        outputs[i] = process_node(model, g, nodes[i], spec);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return outputs;
}

}  // namespace

void ExperimentResult::recompute_aggregate() {
  aggregate.clear();
  std::map<std::pair<std::string, std::string>, std::pair<double, long>> sums;
  for (const auto& row : rows) {
    if (!row.error.empty()) continue;
    auto& [sum, count] = sums[{row.method, row.dist}];
    sum += row.delta;
    ++count;
  }
  for (const auto& [key, sc] : sums) {
    aggregate[key] = sc.first / static_cast<double>(sc.second);
  }
}

std::string ExperimentResult::table() const {
  std::vector<std::string> methods, dists;
  for (const auto& [key, value] : aggregate) {
    if (std::find(methods.begin(), methods.end(), key.first) == methods.end()) {
      methods.push_back(key.first);
    }
    if (std::find(dists.begin(), dists.end(), key.second) == dists.end()) {
      dists.push_back(key.second);
    }
  }
  std::ostringstream out;
  out << std::left << std::setw(14) << "method";
  for (const auto& d : dists) out << std::right << std::setw(14) << d;
  out << '\n';
  for (const auto& m : methods) {
    out << std::left << std::setw(14) << m;
    for (const auto& d : dists) {
      auto it = aggregate.find({m, d});
      if (it == aggregate.end()) {
        out << std::right << std::setw(14) << "-";
      } else {
        out << std::right << std::setw(14) << std::scientific << std::setprecision(3)
            << it->second;
      }
    }
    out << '\n';
  }
  return out.str();
}

ExperimentResult run_experiment(const GcnModel& model, const Graph& g,
                                const ExperimentSpec& spec) {
  if (spec.methods.empty()) throw ContractError("run_experiment: no methods");
  if (spec.dists.empty()) throw ContractError("run_experiment: no distributions");
  if (spec.n_solve < 1 || spec.n_eval < 1) {
    throw ContractError("run_experiment: sample counts must be >= 1");
  }
  const std::vector<int> nodes = spec.nodes.expand(g.num_nodes());
  std::vector<NodeOutput> outputs = process_all_nodes(model, g, spec, nodes);

  ExperimentResult result;
  for (auto& out : outputs) {
    for (auto& row : out.rows) result.rows.push_back(std::move(row));
  }
  result.recompute_aggregate();
  return result;
}

std::vector<SweepRow> checkpoint_sweep(const std::vector<Checkpoint>& checkpoints,
                                       const Graph& g, const ExperimentSpec& spec,
                                       const Matrix* edge_labels, const RocAucConfig& roc_cfg) {
  if (checkpoints.size() < 2) {
    throw ContractError("checkpoint_sweep: need at least 2 checkpoints");
  }
  if (spec.dists.empty()) throw ContractError("checkpoint_sweep: no distributions");
  const std::vector<int> nodes = spec.nodes.expand(g.num_nodes());

  std::vector<SweepRow> sweep;
  for (const auto& ck : checkpoints) {
    SweepRow row;
    row.epoch = ck.epoch;
    row.test_accuracy = accuracy(ck.model, g, g.test_mask);

    ExperimentSpec one = spec;
    one.dists = {spec.dists.front()};
    std::vector<NodeOutput> outputs = process_all_nodes(ck.model, g, one, nodes);

    std::map<std::string, std::pair<double, long>> delta_sums;
    std::map<std::string, std::pair<double, long>> quality_sums;
    const int hops = std::max(1, ck.model.num_conv_layers());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      for (const auto& r : outputs[i].rows) {
        if (!r.error.empty()) continue;
        auto& [sum, count] = delta_sums[r.method];
        sum += r.delta;
        ++count;
      }
      for (const auto& [method, attr] : outputs[i].attributions) {
        try {
          double quality;
          if (edge_labels) {
            std::vector<int> scope = khop_nodes(g, nodes[i], hops);
            std::vector<std::pair<std::pair<int, int>, int>> labeled;
            for (int a : scope) {
              for (int b : scope) {
                if (a != b && g.a(a, b) != 0.0) {
                  labeled.push_back({{a, b}, (*edge_labels)(a, b) != 0.0 ? 1 : 0});
                }
              }
            }
            quality = roc_auc_edges(attr, labeled, roc_cfg);
          } else {
            quality = sparsity_auc(attr);
          }
          auto& [sum, count] = quality_sums[method];
          sum += quality;
          ++count;
        } catch (const ContractError&) {
          // Node with degenerate labels or all-zero scores; skip it.
        }
      }
    }
    for (const auto& [method, sc] : delta_sums) {
      row.mean_delta[method] = sc.first / static_cast<double>(sc.second);
    }
    for (const auto& [method, sc] : quality_sums) {
      row.mean_quality[method] = sc.first / static_cast<double>(sc.second);
    }
    sweep.push_back(std::move(row));
  }
  return sweep;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ContractError("spearman: need two equal-length series");
  }
  std::vector<double> rx = ranks_with_ties(xs);
  std::vector<double> ry = ranks_with_ties(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) throw ContractError("spearman: constant series");
  return cov / std::sqrt(vx * vy);
}

}  // namespace gef
