#include "gef/faithfulness.hpp"

#include <cmath>

namespace gef {

namespace {

Graph perturbed(const Matrix& x, const Matrix& a, const Perturbation& p) {
  Graph out;
  out.x = x - p.eps_x;
  out.a = (a - p.eps_a).cwiseMax(0.0);
  return out;
}

int stream_node(const QuantityOfInterest& qoi) {
  const int v = qoi.selector.node();
  return v >= 0 ? v : 0;
}

}  // namespace

DifferenceModel DifferenceModel::linear(Attribution a) {
  DifferenceModel p;
  p.kind = Kind::Linear;
  p.attr = std::move(a);
  return p;
}

DifferenceModel DifferenceModel::from_kec(KecModel k) {
  DifferenceModel p;
  p.kind = Kind::Kec;
  p.kec = std::move(k);
  return p;
}

DifferenceModel DifferenceModel::subgraph(SubgraphExplanation s) {
  DifferenceModel p;
  p.kind = Kind::Subgraph;
  p.sub = std::move(s);
  return p;
}

FaithfulnessReport evaluate(const DifferenceModel& p, const GcnModel& m, const Graph& g,
                            const QuantityOfInterest& qoi, const PerturbationDistribution& dist,
                            int n_samples, std::uint64_t seed, bool verbose) {
  dist.validate();
  if (n_samples < 1) throw ContractError("evaluate: n_samples must be >= 1");
  qoi.selector.validate();

  RandomStream rng(seed, node_stream(stream_node(qoi), StreamPurpose::Eval));
  const double f0 = forward(m, g, qoi);
  double f0_sub = 0.0;
  if (p.kind == DifferenceModel::Kind::Subgraph) {
    Graph gs;
    gs.x = p.sub.xs;
    gs.a = p.sub.as;
    f0_sub = forward(m, gs, qoi);
  }

  FaithfulnessReport report;
  report.n_samples = n_samples;
  report.seed = seed;
  report.dist = dist.to_string();
  if (verbose) report.residuals.reserve(n_samples);

  double sum_sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Perturbation pert = sample(dist, g, rng);
    const double model_diff = f0 - forward(m, perturbed(g.x, g.a, pert), qoi);

    double p_diff = 0.0;
    switch (p.kind) {
      case DifferenceModel::Kind::Linear:
        p_diff = (p.attr.phi_x.array() * pert.eps_x.array()).sum() +
                 (p.attr.phi_a.array() * pert.eps_a.array()).sum();
        break;
      case DifferenceModel::Kind::Kec: {
        Vector phi = kec_phi(p.kec, g, pert);
        double acc = 0.0;
        const int d = g.num_features();
        for (int k = 0; k < p.kec.order; ++k) {
          acc += phi.segment(k * d, d).dot(p.kec.w[k]);
        }
        p_diff = acc;
        break;
      }
      case DifferenceModel::Kind::Subgraph:
        p_diff = f0_sub - forward(m, perturbed(p.sub.xs, p.sub.as, pert), qoi);
        break;
    }
    const double residual = p_diff - model_diff;
    sum_sq += residual * residual;
    if (verbose) report.residuals.push_back(residual);
  }
  report.delta = sum_sq / static_cast<double>(n_samples);
  return report;
}

double subgraph_lower_bound(const SubgraphExplanation& sub, const GcnModel& m, const Graph& g,
                            const QuantityOfInterest& qoi, const PerturbationDistribution& dist,
                            int n_samples, std::uint64_t seed) {
  dist.validate();
  if (n_samples < 1) throw ContractError("subgraph_lower_bound: n_samples must be >= 1");

  RandomStream rng(seed, node_stream(stream_node(qoi), StreamPurpose::Eval));
  Graph gs;
  gs.x = sub.xs;
  gs.a = sub.as;
  const double c = forward(m, gs, qoi) - forward(m, g, qoi);

  double mean_orig = 0.0, mean_sub = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Perturbation pert = sample(dist, g, rng);
    mean_orig += forward(m, perturbed(g.x, g.a, pert), qoi);
    mean_sub += forward(m, perturbed(sub.xs, sub.as, pert), qoi);
  }
  mean_orig /= static_cast<double>(n_samples);
  mean_sub /= static_cast<double>(n_samples);
  const double bound = c + mean_orig - mean_sub;
  return bound * bound;
}

}  // namespace gef
