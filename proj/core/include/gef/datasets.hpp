#pragma once

#include <cstdint>

#include "gef/graph.hpp"

namespace gef {

struct BaShapesConfig {
  int base_nodes = 300;
  int attachment = 5;       // preferential-attachment degree
  int n_motifs = 80;
  double random_edge_fraction = 0.1;  // extra random edges as a fraction of n
  int feature_dim = 10;
  std::uint64_t seed = 0;
};

// Preferential-attachment base graph with house motifs hung off random base
// nodes. Node classes: 0 base, 1 roof apex, 2 roof base, 3 floor. Features
// are constant by construction. edge_labels(i, j) = 1 iff i and j belong to
// the same motif.
struct BaShapesData {
  Graph graph;
  Matrix edge_labels;  // n x n, 0/1, symmetric
};

BaShapesData gen_bashapes(const BaShapesConfig& cfg);

// Small synthetic citation-style graph: class-conditional Gaussian features
// with a planted community structure in the adjacency. Stand-in for the
// citation datasets, which are loaded from JSON rather than shipped.
Graph gen_citation_style(int n, int d, int classes, std::uint64_t seed);

// Seeded disjoint train/val/test node split with the given fractions.
void assign_masks(Graph& g, double train_frac, double val_frac, std::uint64_t seed);

}  // namespace gef
