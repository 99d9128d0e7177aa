#include "gef/perturb.hpp"

#include <algorithm>
#include <sstream>

namespace gef {

bool PerturbationDistribution::perturbs_x() const {
  return std::any_of(components.begin(), components.end(),
                     [](const Component& c) { return c.kind == Kind::UniformX; });
}

bool PerturbationDistribution::perturbs_a() const {
  return std::any_of(components.begin(), components.end(),
                     [](const Component& c) { return c.kind != Kind::UniformX; });
}

void PerturbationDistribution::validate() const {
  if (components.empty()) throw ContractError("distribution: no components");
  int x_count = 0, a_count = 0;
  for (const auto& c : components) {
    if (!(c.sigma > 0.0 && c.sigma <= 1.0)) {
      throw ContractError("distribution: sigma must be in (0, 1]");
    }
    (c.kind == Kind::UniformX ? x_count : a_count) += 1;
  }
  if (x_count > 1 || a_count > 1) {
    throw ContractError("distribution: at most one X and one A component");
  }
}

PerturbationDistribution PerturbationDistribution::parse(const std::string& spec) {
  PerturbationDistribution dist;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, '+')) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) {
      throw ContractError("distribution spec: expected kind:sigma in '" + token + "'");
    }
    const std::string kind = token.substr(0, colon);
    double sigma;
    try {
      sigma = std::stod(token.substr(colon + 1));
    } catch (const std::exception&) {
      throw ContractError("distribution spec: bad sigma in '" + token + "'");
    }
    Kind k;
    if (kind == "ux") {
      k = Kind::UniformX;
    } else if (kind == "ua") {
      k = Kind::UniformA;
    } else if (kind == "ba") {
      k = Kind::BernoulliA;
    } else {
      throw ContractError("distribution spec: unknown kind '" + kind + "'");
    }
    dist.components.push_back({k, sigma});
  }
  dist.validate();
  return dist;
}

std::string PerturbationDistribution::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out << '+';
    switch (components[i].kind) {
      case Kind::UniformX: out << "ux:"; break;
      case Kind::UniformA: out << "ua:"; break;
      case Kind::BernoulliA: out << "ba:"; break;
    }
    out << components[i].sigma;
  }
  return out.str();
}

std::vector<std::pair<int, int>> perturbable_entries(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || g.a(i, j) != 0.0) entries.emplace_back(i, j);
    }
  }
  return entries;
}

Perturbation sample(const PerturbationDistribution& dist, const Graph& g, RandomStream& rng) {
  dist.validate();
  const int n = g.num_nodes();
  const int d = g.num_features();
  Perturbation p;
  p.eps_x = Matrix::Zero(n, d);
  p.eps_a = Matrix::Zero(n, n);

  for (const auto& comp : dist.components) {
    switch (comp.kind) {
      case PerturbationDistribution::Kind::UniformX: {
        const double r = g.x.maxCoeff() - g.x.minCoeff();
        const double half = comp.sigma * r;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < d; ++j) p.eps_x(i, j) = rng.uniform(-half, half);
        }
        break;
      }
      case PerturbationDistribution::Kind::UniformA: {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i != j && g.a(i, j) == 0.0) continue;
            const double u = rng.uniform(-comp.sigma, comp.sigma);
            const double perturbed = std::max(g.a(i, j) - u, 0.0);
            p.eps_a(i, j) = g.a(i, j) - perturbed;
          }
        }
        break;
      }
      case PerturbationDistribution::Kind::BernoulliA: {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i != j && g.a(i, j) == 0.0) continue;
            if (rng.uniform() < comp.sigma) p.eps_a(i, j) = g.a(i, j);
          }
        }
        break;
      }
    }
  }
  return p;
}

std::vector<Perturbation> sample_batch(const PerturbationDistribution& dist, const Graph& g,
                                       std::uint64_t master_seed, int node_id, int count,
                                       StreamPurpose purpose) {
  if (count < 1) throw ContractError("sample_batch: count must be >= 1");
  RandomStream rng(master_seed, node_stream(node_id, purpose));
  std::vector<Perturbation> batch;
  batch.reserve(count);
  for (int i = 0; i < count; ++i) batch.push_back(sample(dist, g, rng));
  return batch;
}

}  // namespace gef
