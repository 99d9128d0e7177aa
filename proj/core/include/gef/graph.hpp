#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gef/error.hpp"

namespace gef {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense attributed graph. Adjacency entries are non-negative edge weights;
// the representation is directed (symmetric inputs stay symmetric, nothing
// is re-symmetrized). Immutable after construction by convention.
struct Graph {
  Matrix x;  // n x d node features
  Matrix a;  // n x n edge weights, entries >= 0
  std::vector<int> labels;                // empty or length n
  std::vector<std::uint8_t> train_mask;   // empty or length n
  std::vector<std::uint8_t> val_mask;
  std::vector<std::uint8_t> test_mask;

  int num_nodes() const { return static_cast<int>(a.rows()); }
  int num_features() const { return static_cast<int>(x.cols()); }
  bool has_labels() const { return !labels.empty(); }

  // Validates invariants and clips tiny negative adjacency entries to zero.
  static Graph make(Matrix x, Matrix a,
                    std::vector<int> labels = {},
                    std::vector<std::uint8_t> train_mask = {},
                    std::vector<std::uint8_t> val_mask = {},
                    std::vector<std::uint8_t> test_mask = {});
};

// Length-n selector e_v. One-hot for single-node explanation; an all-ones
// selector acts as a whole-graph sum readout.
struct NodeSelector {
  Vector weights;

  static NodeSelector one_hot(int n, int v);
  static NodeSelector all_ones(int n);

  // Index of the single nonzero entry, or -1 for non-one-hot selectors.
  int node() const;
  void validate() const;
};

// N(A) = D^{-1/2} (A + I) D^{-1/2} with D_ii = sum_j (A + I)_ij.
// Degrees are >= 1 for non-negative A, so no epsilon is needed.
Matrix normalize_adjacency(const Matrix& a);

// Pullback of a gradient w.r.t. N(A) to a gradient w.r.t. A, including the
// dependence of the degree matrix on A. Accepts adjacency matrices with
// positive row sums of (A + I); throws NumericalError otherwise.
Matrix normalize_adjacency_backward(const Matrix& a, const Matrix& grad_n);

// Exact repeated product A^k, k >= 1.
Matrix matrix_power(const Matrix& a, int k);

// Pullback through B = A^k: given dF/dB returns dF/dA.
Matrix matrix_power_backward(const Matrix& a, int k, const Matrix& grad_b);

// Column-stacking vectorization and its inverse.
Vector vectorize(const Matrix& h);
Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// Nodes reachable from v in <= k hops over nonzero entries of A (treating an
// entry in either direction as adjacency), sorted ascending; always holds v.
std::vector<int> khop_nodes(const Graph& g, int v, int k);

// Induced computation subgraph of the k-hop neighborhood of v, with the
// node-id mapping back to the original graph.
struct KhopSubgraph {
  Graph graph;               // induced subgraph
  std::vector<int> nodes;    // local index -> global node id (sorted)
  std::vector<int> to_local; // global node id -> local index or -1
  int local_of(int global_node) const;
};

KhopSubgraph extract_khop(const Graph& g, int v, int k);

}  // namespace gef
