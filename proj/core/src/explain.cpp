#include "gef/explain.hpp"

#include <algorithm>
#include <cmath>

namespace gef {

namespace {

using RowVector = Eigen::RowVectorXd;

// e^T N(A^k) without forming A^k: needs only matrix-vector products.
RowVector normalized_power_row(const Matrix& a, const Vector& e, int k) {
  const Eigen::Index n = a.rows();
  // Row sums of A^k via iterated products with the ones vector.
  Vector s = Vector::Ones(n);
  for (int i = 0; i < k; ++i) s = a * s;
  Vector deg = s.array() + 1.0;
  Vector inv_sqrt = deg.array().rsqrt();
  // (e^T N)_j = [ (w^T A^k)_j + w_j ] / sqrt(d_j) with w = e / sqrt(d).
  RowVector w = (e.array() * inv_sqrt.array()).matrix().transpose();
  RowVector r = w;
  for (int i = 0; i < k; ++i) r = r * a;
  return (r + w).cwiseProduct(inv_sqrt.transpose());
}

int stream_node(const QuantityOfInterest& qoi) {
  const int v = qoi.selector.node();
  return v >= 0 ? v : 0;
}

Graph perturbed(const Graph& g, const Perturbation& p) {
  Graph out;
  out.x = g.x - p.eps_x;
  out.a = (g.a - p.eps_a).cwiseMax(0.0);
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void restrict_to_perturbable(Attribution& attr, const Graph& g) {
  const int n = g.num_nodes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && g.a(i, j) == 0.0) attr.phi_a(i, j) = 0.0;
    }
  }
}

Attribution saliency(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi) {
  InputGradients gin = grad_input(m, g, qoi);
  Attribution attr;
  attr.phi_x = std::move(gin.dx);
  attr.phi_a = std::move(gin.da);
  attr.method = "sm";
  restrict_to_perturbable(attr, g);
  return attr;
}

Attribution integrated_gradients(const GcnModel& m, const Graph& g,
                                 const QuantityOfInterest& qoi, IgBaseline baseline,
                                 int steps, std::uint64_t seed) {
  if (steps < 1) throw ContractError("integrated_gradients: steps must be >= 1");
  const int n = g.num_nodes();
  const int d = g.num_features();

  Matrix x0, a0;
  std::string baseline_name;
  switch (baseline) {
    case IgBaseline::Zero:
      x0 = Matrix::Zero(n, d);
      a0 = Matrix::Zero(n, n);
      baseline_name = "zero";
      break;
    case IgBaseline::Random: {
      RandomStream rng(seed, static_cast<std::uint64_t>(StreamPurpose::Init));
      x0.resize(n, d);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x0(i, j) = rng.uniform();
      }
      a0 = Matrix::Zero(n, n);
      for (const auto& [i, j] : perturbable_entries(g)) a0(i, j) = rng.uniform();
      baseline_name = "random";
      break;
    }
    case IgBaseline::Input:
      // Degenerate path: every step evaluates the gradient at the input, so
      // the result equals the saliency map.
      x0 = g.x;
      a0 = g.a;
      baseline_name = "input";
      break;
  }

  Attribution attr;
  attr.phi_x = Matrix::Zero(n, d);
  attr.phi_a = Matrix::Zero(n, n);
  for (int s = 0; s < steps; ++s) {
    const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
    Graph gt;
    gt.x = x0 + t * (g.x - x0);
    gt.a = a0 + t * (g.a - a0);
    InputGradients gin = grad_input(m, gt, qoi);
    attr.phi_x += gin.dx;
    attr.phi_a += gin.da;
  }
  attr.phi_x /= static_cast<double>(steps);
  attr.phi_a /= static_cast<double>(steps);
  attr.method = "ig";
  attr.baseline = baseline_name;
  attr.sample_count = steps;
  attr.seed = seed;
  restrict_to_perturbable(attr, g);
  return attr;
}

Attribution linear_optimal(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
                           const PerturbationDistribution& dist, int n_samples,
                           std::uint64_t seed, const TruncatedSvdConfig& cfg) {
  dist.validate();
  if (n_samples < 1) throw ContractError("linear_optimal: n_samples must be >= 1");
  const int n = g.num_nodes();
  const int d = g.num_features();

  const bool use_x = dist.perturbs_x();
  const bool use_a = dist.perturbs_a();
  std::vector<std::pair<int, int>> a_coords;
  if (use_a) a_coords = perturbable_entries(g);
  const int x_dim = use_x ? n * d : 0;
  const int dim = x_dim + static_cast<int>(a_coords.size());
  if (dim == 0) throw ContractError("linear_optimal: distribution perturbs nothing");

  OuterProductAccumulator acc(dim);
  RandomStream rng(seed, node_stream(stream_node(qoi), StreamPurpose::Solver));
  const double f0 = forward(m, g, qoi);

  Vector eps(dim);
  for (int s = 0; s < n_samples; ++s) {
    Perturbation p = sample(dist, g, rng);
    int idx = 0;
    if (use_x) {
      eps.head(x_dim) = vectorize(p.eps_x);
      idx = x_dim;
    }
    for (const auto& [i, j] : a_coords) eps[idx++] = p.eps_a(i, j);
    const double target = f0 - forward(m, perturbed(g, p), qoi);
    acc.add(eps, target);
  }

  int discarded = 0;
  Vector w = solve_least_squares(acc, cfg, &discarded);

  Attribution attr;
  attr.phi_x = Matrix::Zero(n, d);
  attr.phi_a = Matrix::Zero(n, n);
  int idx = 0;
  if (use_x) {
    attr.phi_x = unvectorize(w.head(x_dim), n, d);
    idx = x_dim;
  }
  for (const auto& [i, j] : a_coords) attr.phi_a(i, j) = w[idx++];
  attr.method = "linear";
  attr.sample_count = n_samples;
  attr.seed = seed;
  return attr;
}

KecModel kec_solve(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
                   const PerturbationDistribution& dist, int n_samples, std::uint64_t seed,
                   const TruncatedSvdConfig& cfg) {
  dist.validate();
  if (n_samples < 1) throw ContractError("kec_solve: n_samples must be >= 1");
  qoi.selector.validate();
  const int order = m.num_conv_layers();
  if (order < 1) throw ContractError("kec_solve: model has no conv layers");
  const int d = g.num_features();
  const Vector& e = qoi.selector.weights;
  if (e.size() != g.num_nodes()) throw ContractError("kec_solve: selector length mismatch");

  std::vector<RowVector> base(order);
  for (int k = 0; k < order; ++k) {
    base[k] = normalized_power_row(g.a, e, k + 1) * g.x;
  }

  OuterProductAccumulator acc(order * d);
  RandomStream rng(seed, node_stream(stream_node(qoi), StreamPurpose::Solver));
  const double f0 = forward(m, g, qoi);

  Vector phi(order * d);
  for (int s = 0; s < n_samples; ++s) {
    Perturbation p = sample(dist, g, rng);
    Graph gp = perturbed(g, p);
    for (int k = 0; k < order; ++k) {
      RowVector tau = base[k] - normalized_power_row(gp.a, e, k + 1) * gp.x;
      phi.segment(k * d, d) = tau.transpose();
    }
    const double target = f0 - forward(m, gp, qoi);
    acc.add(phi, target);
  }

  KecModel kec;
  kec.order = order;
  kec.selector = qoi.selector;
  kec.sample_count = n_samples;
  Vector w = solve_least_squares(acc, cfg, &kec.discarded_singular_values);
  kec.w.reserve(order);
  for (int k = 0; k < order; ++k) kec.w.push_back(w.segment(k * d, d));
  return kec;
}

double kec_evaluate(const KecModel& kec, const Graph& g) {
  double p = 0.0;
  for (int k = 0; k < kec.order; ++k) {
    RowVector row = normalized_power_row(g.a, kec.selector.weights, k + 1) * g.x;
    p += (row * kec.w[k]).value();
  }
  return p;
}

Vector kec_phi(const KecModel& kec, const Graph& g, const Perturbation& p) {
  const int d = g.num_features();
  Graph gp = perturbed(g, p);
  Vector phi(kec.order * d);
  for (int k = 0; k < kec.order; ++k) {
    RowVector tau = normalized_power_row(g.a, kec.selector.weights, k + 1) * g.x -
                    normalized_power_row(gp.a, kec.selector.weights, k + 1) * gp.x;
    phi.segment(k * d, d) = tau.transpose();
  }
  return phi;
}

Attribution kec_attribute(const KecModel& kec, const Graph& g) {
  const int n = g.num_nodes();
  const int d = g.num_features();
  const Vector& e = kec.selector.weights;
  Attribution attr;
  attr.phi_x = Matrix::Zero(n, d);
  attr.phi_a = Matrix::Zero(n, n);
  for (int k = 0; k < kec.order; ++k) {
    RowVector row = normalized_power_row(g.a, e, k + 1);
    attr.phi_x.noalias() += row.transpose() * kec.w[k].transpose();
    // d p_k / d N(A^k) is the rank-one e (X w_k)^T.
    Matrix apow = matrix_power(g.a, k + 1);
    Matrix dn = e * (g.x * kec.w[k]).transpose();
    Matrix db = normalize_adjacency_backward(apow, dn);
    attr.phi_a += matrix_power_backward(g.a, k + 1, db);
  }
  attr.method = "kec";
  attr.sample_count = kec.sample_count;
  restrict_to_perturbable(attr, g);
  return attr;
}

SoftMask softmask_explain(const GcnModel& m, const Graph& g, int v,
                          const SoftMaskConfig& cfg) {
  if (v < 0 || v >= g.num_nodes()) throw ContractError("softmask_explain: node out of range");
  const int n = g.num_nodes();
  const int d = g.num_features();
  const int hops = std::max(1, m.num_conv_layers());

  std::vector<int> scope = khop_nodes(g, v, hops);
  std::vector<char> in_scope(n, 0);
  for (int u : scope) in_scope[u] = 1;

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.a(i, j) != 0.0 && in_scope[i] && in_scope[j]) edges.emplace_back(i, j);
    }
  }
  std::vector<int> feat_rows;
  for (int u : scope) feat_rows.push_back(u);

  const int target = predict_class(m, g, v);

  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Init));
  Matrix flog(n, d);
  for (int r : feat_rows) {
    for (int c = 0; c < d; ++c) flog(r, c) = rng.normal(0.0, 0.1);
  }
  Matrix elog = Matrix::Zero(n, n);
  for (const auto& [i, j] : edges) elog(i, j) = rng.normal(0.0, 0.1);

  const double feat_count = std::max<std::size_t>(1, feat_rows.size() * d);
  const double edge_count = std::max<std::size_t>(1, edges.size());

  Matrix mf = Matrix::Zero(n, d), vf = Matrix::Zero(n, d);
  Matrix me = Matrix::Zero(n, n), ve = Matrix::Zero(n, n);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  double loss = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Graph gm;
    Matrix fmask = Matrix::Ones(n, d);
    for (int r : feat_rows) {
      for (int c = 0; c < d; ++c) fmask(r, c) = sigmoid(flog(r, c));
    }
    Matrix emask = Matrix::Ones(n, n);
    for (const auto& [i, j] : edges) emask(i, j) = sigmoid(elog(i, j));
    gm.x = g.x.cwiseProduct(fmask);
    gm.a = g.a.cwiseProduct(emask);

    ForwardCache cache;
    Matrix logits = forward_all(m, gm, &cache);
    Vector row = logits.row(v).transpose();
    const double mx = row.maxCoeff();
    Vector ex = (row.array() - mx).exp();
    const double z = ex.sum();
    const double pred_loss = -(row[target] - mx - std::log(z));

    double reg_loss = 0.0;
    for (const auto& [i, j] : edges) {
      const double mk = emask(i, j);
      reg_loss += cfg.edge_reg * mk / edge_count;
      if (mk > 0.0 && mk < 1.0) {
        reg_loss += cfg.entropy_reg * (-mk * std::log(mk) - (1 - mk) * std::log(1 - mk)) / edge_count;
      }
    }
    for (int r : feat_rows) {
      for (int c = 0; c < d; ++c) {
        const double mk = fmask(r, c);
        reg_loss += cfg.feat_reg * mk / feat_count;
        if (mk > 0.0 && mk < 1.0) {
          reg_loss += cfg.entropy_reg * (-mk * std::log(mk) - (1 - mk) * std::log(1 - mk)) / feat_count;
        }
      }
    }
    loss = pred_loss + reg_loss;
    if (!std::isfinite(loss)) {
      throw NumericalError("softmask_explain: loss diverged at epoch " + std::to_string(epoch),
                           loss);
    }

    Matrix dout = Matrix::Zero(n, logits.cols());
    Vector grad = ex / z;
    grad[target] -= 1.0;
    dout.row(v) = grad.transpose();

    InputGradients gin;
    backward(m, gm, cache, dout, &gin, nullptr);

    auto adam_update = [&](double grad_val, double& logit, double& mmt, double& vel) {
      mmt = beta1 * mmt + (1.0 - beta1) * grad_val;
      vel = beta2 * vel + (1.0 - beta2) * grad_val * grad_val;
      const double bc1 = 1.0 - std::pow(beta1, epoch);
      const double bc2 = 1.0 - std::pow(beta2, epoch);
      logit -= cfg.lr * (mmt / bc1) / (std::sqrt(vel / bc2) + adam_eps);
    };

    for (int r : feat_rows) {
      for (int c = 0; c < d; ++c) {
        const double mk = fmask(r, c);
        const double dsig = mk * (1.0 - mk);
        double gl = gin.dx(r, c) * g.x(r, c) * dsig;
        gl += cfg.feat_reg * dsig / feat_count;
        if (mk > 0.0 && mk < 1.0) {
          gl += cfg.entropy_reg * std::log((1.0 - mk) / mk) * dsig / feat_count;
        }
        adam_update(gl, flog(r, c), mf(r, c), vf(r, c));
      }
    }
    for (const auto& [i, j] : edges) {
      const double mk = emask(i, j);
      const double dsig = mk * (1.0 - mk);
      double gl = gin.da(i, j) * g.a(i, j) * dsig;
      gl += cfg.edge_reg * dsig / edge_count;
      if (mk > 0.0 && mk < 1.0) {
        gl += cfg.entropy_reg * std::log((1.0 - mk) / mk) * dsig / edge_count;
      }
      adam_update(gl, elog(i, j), me(i, j), ve(i, j));
    }
  }

  SoftMask out;
  out.feature_mask = Matrix::Ones(n, d);
  for (int r : feat_rows) {
    for (int c = 0; c < d; ++c) out.feature_mask(r, c) = sigmoid(flog(r, c));
  }
  out.edge_mask = Matrix::Ones(n, n);
  for (const auto& [i, j] : edges) out.edge_mask(i, j) = sigmoid(elog(i, j));
  out.node = v;
  out.target_class = target;
  out.final_loss = loss;
  return out;
}

SubgraphExplanation harden(const SoftMask& mask, const Graph& g, double threshold) {
  SubgraphExplanation sub;
  sub.threshold = threshold;
  sub.xs = g.x.cwiseProduct(mask.feature_mask);
  sub.as = g.a;
  const int n = g.num_nodes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.a(i, j) != 0.0 && mask.edge_mask(i, j) < threshold) sub.as(i, j) = 0.0;
    }
  }
  return sub;
}

SubgraphExplanation soften(const SoftMask& mask, const Graph& g) {
  SubgraphExplanation sub;
  sub.xs = g.x.cwiseProduct(mask.feature_mask);
  sub.as = g.a.cwiseProduct(mask.edge_mask);
  return sub;
}

Attribution softmask_attribution(const SoftMask& mask, const Graph& g) {
  Attribution attr;
  attr.phi_x = mask.feature_mask;
  attr.phi_a = Matrix::Zero(g.num_nodes(), g.num_nodes());
  const int n = g.num_nodes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.a(i, j) != 0.0) attr.phi_a(i, j) = mask.edge_mask(i, j);
    }
  }
  attr.method = "gnnexpl";
  return attr;
}

Attribution scatter_attribution(const Attribution& local, const KhopSubgraph& sub,
                                int n, int d) {
  Attribution out;
  out.phi_x = Matrix::Zero(n, d);
  out.phi_a = Matrix::Zero(n, n);
  const int m = static_cast<int>(sub.nodes.size());
  for (int i = 0; i < m; ++i) {
    out.phi_x.row(sub.nodes[i]) = local.phi_x.row(i);
    for (int j = 0; j < m; ++j) out.phi_a(sub.nodes[i], sub.nodes[j]) = local.phi_a(i, j);
  }
  out.method = local.method;
  out.baseline = local.baseline;
  out.sample_count = local.sample_count;
  out.seed = local.seed;
  return out;
}

}  // namespace gef
