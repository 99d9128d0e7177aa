#include "gef/datasets.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "gef/rng.hpp"

namespace gef {

namespace {

void add_edge(Matrix& a, int i, int j) {
  a(i, j) = 1.0;
  a(j, i) = 1.0;
}

}  // namespace

BaShapesData gen_bashapes(const BaShapesConfig& cfg) {
  if (cfg.base_nodes < 5) throw ContractError("gen_bashapes: base graph too small");
  if (cfg.n_motifs < 1) throw ContractError("gen_bashapes: need at least one motif");
  if (cfg.attachment < 1 || cfg.attachment >= cfg.base_nodes) {
    throw ContractError("gen_bashapes: bad attachment parameter");
  }

  const int n = cfg.base_nodes + 5 * cfg.n_motifs;
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Data));

  Matrix a = Matrix::Zero(n, n);
  std::vector<int> labels(n, 0);

  // Preferential attachment: seed clique of `attachment` nodes, then each new
  // node picks `attachment` distinct targets weighted by degree.
  std::vector<int> targets;  // degree-weighted pool of endpoints
  for (int i = 0; i < cfg.attachment; ++i) {
    for (int j = i + 1; j < cfg.attachment; ++j) {
      add_edge(a, i, j);
      targets.push_back(i);
      targets.push_back(j);
    }
  }
  for (int v = cfg.attachment; v < cfg.base_nodes; ++v) {
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < cfg.attachment) {
      const int u = targets[rng.below(targets.size())];
      if (u != v && std::find(chosen.begin(), chosen.end(), u) == chosen.end()) {
        chosen.push_back(u);
      }
    }
    for (int u : chosen) {
      add_edge(a, v, u);
      targets.push_back(v);
      targets.push_back(u);
    }
  }

  // House motifs: apex(1), roof base(2, 2), floor(3, 3); six internal edges.
  for (int t = 0; t < cfg.n_motifs; ++t) {
    const int apex = cfg.base_nodes + 5 * t;
    const int mid1 = apex + 1, mid2 = apex + 2, bot1 = apex + 3, bot2 = apex + 4;
    labels[apex] = 1;
    labels[mid1] = labels[mid2] = 2;
    labels[bot1] = labels[bot2] = 3;
    add_edge(a, apex, mid1);
    add_edge(a, apex, mid2);
    add_edge(a, mid1, mid2);
    add_edge(a, mid1, bot1);
    add_edge(a, mid2, bot2);
    add_edge(a, bot1, bot2);
    const int anchor = static_cast<int>(rng.below(cfg.base_nodes));
    const int port = apex + static_cast<int>(rng.below(5));
    add_edge(a, port, anchor);
  }

  const int extra = static_cast<int>(cfg.random_edge_fraction * n);
  int added = 0;
  while (added < extra) {
    const int i = static_cast<int>(rng.below(n));
    const int j = static_cast<int>(rng.below(n));
    if (i == j || a(i, j) != 0.0) continue;
    add_edge(a, i, j);
    ++added;
  }

  Matrix x = Matrix::Ones(n, cfg.feature_dim);

  BaShapesData data;
  data.graph = Graph::make(std::move(x), std::move(a), std::move(labels));
  assign_masks(data.graph, 0.8, 0.1, mix_seed(cfg.seed, 17));

  data.edge_labels = Matrix::Zero(n, n);
  for (int t = 0; t < cfg.n_motifs; ++t) {
    const int start = cfg.base_nodes + 5 * t;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i != j && data.graph.a(start + i, start + j) != 0.0) {
          data.edge_labels(start + i, start + j) = 1.0;
        }
      }
    }
  }
  return data;
}

Graph gen_citation_style(int n, int d, int classes, std::uint64_t seed) {
  if (n < classes || classes < 2 || d < 1) throw ContractError("gen_citation_style: bad sizes");
  RandomStream rng(seed, static_cast<std::uint64_t>(StreamPurpose::Data));

  Matrix means(classes, d);
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < d; ++j) means(c, j) = rng.normal(0.0, 1.0);
  }

  std::vector<int> labels(n);
  Matrix x(n, d);
  for (int v = 0; v < n; ++v) {
    labels[v] = v % classes;
    for (int j = 0; j < d; ++j) x(v, j) = means(labels[v], j) + rng.normal(0.0, 0.6);
  }

  const double p_in = 12.0 / static_cast<double>(n);
  const double p_out = 1.5 / static_cast<double>(n);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? p_in : p_out;
      if (rng.uniform() < p) add_edge(a, i, j);
    }
  }

  Graph g = Graph::make(std::move(x), std::move(a), std::move(labels));
  assign_masks(g, 0.6, 0.2, mix_seed(seed, 23));
  return g;
}

void assign_masks(Graph& g, double train_frac, double val_frac, std::uint64_t seed) {
  const int n = g.num_nodes();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed, static_cast<std::uint64_t>(StreamPurpose::Data));
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  g.train_mask.assign(n, 0);
  g.val_mask.assign(n, 0);
  g.test_mask.assign(n, 0);
  const int n_train = static_cast<int>(train_frac * n);
  const int n_val = static_cast<int>(val_frac * n);
  for (int i = 0; i < n; ++i) {
    if (i < n_train) {
      g.train_mask[order[i]] = 1;
    } else if (i < n_train + n_val) {
      g.val_mask[order[i]] = 1;
    } else {
      g.test_mask[order[i]] = 1;
    }
  }
}

}  // namespace gef
