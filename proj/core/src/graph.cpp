#include "gef/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace gef {

namespace {

void check_mask(const std::vector<std::uint8_t>& mask, int n, const char* name) {
  if (!mask.empty() && static_cast<int>(mask.size()) != n) {
    throw ContractError(std::string(name) + " length does not match node count");
  }
}

}  // namespace

Graph Graph::make(Matrix x, Matrix a, std::vector<int> labels,
                  std::vector<std::uint8_t> train_mask,
                  std::vector<std::uint8_t> val_mask,
                  std::vector<std::uint8_t> test_mask) {
  if (a.rows() != a.cols()) throw ContractError("adjacency must be square");
  if (x.rows() != a.rows()) throw ContractError("feature rows must match node count");
  if (!x.allFinite()) throw ContractError("node features contain non-finite entries");
  if (!a.allFinite()) throw ContractError("adjacency contains non-finite entries");
  const int n = static_cast<int>(a.rows());
  if (!labels.empty() && static_cast<int>(labels.size()) != n) {
    throw ContractError("labels length does not match node count");
  }
  check_mask(train_mask, n, "train_mask");
  check_mask(val_mask, n, "val_mask");
  check_mask(test_mask, n, "test_mask");
  for (int i = 0; i < n; ++i) {
    const bool tr = !train_mask.empty() && train_mask[i];
    const bool va = !val_mask.empty() && val_mask[i];
    const bool te = !test_mask.empty() && test_mask[i];
    if ((tr && va) || (tr && te) || (va && te)) {
      throw ContractError("train/val/test masks overlap");
    }
  }
  if ((a.array() < -1e-9).any()) {
    throw ContractError("adjacency contains negative edge weights");
  }
  a = a.cwiseMax(0.0);
  Graph g;
  g.x = std::move(x);
  g.a = std::move(a);
  g.labels = std::move(labels);
  g.train_mask = std::move(train_mask);
  g.val_mask = std::move(val_mask);
  g.test_mask = std::move(test_mask);
  return g;
}

NodeSelector NodeSelector::one_hot(int n, int v) {
  if (v < 0 || v >= n) throw ContractError("selector node out of range");
  NodeSelector s;
  s.weights = Vector::Zero(n);
  s.weights[v] = 1.0;
  return s;
}

NodeSelector NodeSelector::all_ones(int n) {
  NodeSelector s;
  s.weights = Vector::Ones(n);
  return s;
}

int NodeSelector::node() const {
  int hot = -1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) {
      if (hot >= 0 || weights[i] != 1.0) return -1;
      hot = static_cast<int>(i);
    }
  }
  return hot;
}

void NodeSelector::validate() const {
  if (weights.size() == 0 || weights.isZero(0.0)) {
    throw ContractError("selector must have at least one nonzero entry");
  }
}

Matrix normalize_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractError("normalize_adjacency: non-square input");
  const Eigen::Index n = a.rows();
  Matrix s = a + Matrix::Identity(n, n);
  Vector deg = s.rowwise().sum();
  if ((deg.array() <= 0.0).any()) {
    throw NumericalError("normalize_adjacency: non-positive degree");
  }
  Vector inv_sqrt = deg.array().rsqrt();
  return inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();
}

Matrix normalize_adjacency_backward(const Matrix& a, const Matrix& grad_n) {
  const Eigen::Index n = a.rows();
  if (grad_n.rows() != n || grad_n.cols() != n) {
    throw ContractError("normalize_adjacency_backward: gradient shape mismatch");
  }
  Matrix s = a + Matrix::Identity(n, n);
  Vector deg = s.rowwise().sum();
  if ((deg.array() <= 0.0).any()) {
    throw NumericalError("normalize_adjacency_backward: non-positive degree");
  }
  Vector inv_sqrt = deg.array().rsqrt();
  Matrix nrm = inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();

  // dF/dS_pq = G_pq / sqrt(d_p d_q) - c_p, where c_p collects the degree
  // dependence: d_p enters N through row p and column p.
  Matrix gn = grad_n.cwiseProduct(nrm);
  Vector c = (gn.rowwise().sum() + gn.colwise().sum().transpose());
  c = c.array() / (2.0 * deg.array());
  Matrix direct = inv_sqrt.asDiagonal() * grad_n * inv_sqrt.asDiagonal();
  return direct.colwise() - c;
}

Matrix matrix_power(const Matrix& a, int k) {
  if (a.rows() != a.cols()) throw ContractError("matrix_power: non-square input");
  if (k < 1) throw ContractError("matrix_power: k must be >= 1");
  Matrix out = a;
  for (int i = 1; i < k; ++i) out = out * a;
  return out;
}

Matrix matrix_power_backward(const Matrix& a, int k, const Matrix& grad_b) {
  if (k < 1) throw ContractError("matrix_power_backward: k must be >= 1");
  const Eigen::Index n = a.rows();
  if (grad_b.rows() != n || grad_b.cols() != n) {
    throw ContractError("matrix_power_backward: gradient shape mismatch");
  }
  // d/dA tr(G^T A^k) = sum_{i=0}^{k-1} (A^T)^i G (A^T)^{k-1-i}
  std::vector<Matrix> at_pows(k);
  at_pows[0] = Matrix::Identity(n, n);
  Matrix at = a.transpose();
  for (int i = 1; i < k; ++i) at_pows[i] = at_pows[i - 1] * at;
  Matrix grad = Matrix::Zero(n, n);
  for (int i = 0; i < k; ++i) grad += at_pows[i] * grad_b * at_pows[k - 1 - i];
  return grad;
}

Vector vectorize(const Matrix& h) {
  return Eigen::Map<const Vector>(h.data(), h.size());
}

Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw ContractError("unvectorize: length/shape mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

std::vector<int> khop_nodes(const Graph& g, int v, int k) {
  const int n = g.num_nodes();
  if (v < 0 || v >= n) throw ContractError("khop_nodes: node out of range");
  if (k < 1) throw ContractError("khop_nodes: k must be >= 1");
  std::vector<int> dist(n, -1);
  std::deque<int> queue{v};
  dist[v] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (dist[u] == k) continue;
    for (int w = 0; w < n; ++w) {
      if (dist[w] < 0 && (g.a(u, w) != 0.0 || g.a(w, u) != 0.0)) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  std::vector<int> nodes;
  for (int i = 0; i < n; ++i) {
    if (dist[i] >= 0) nodes.push_back(i);
  }
  return nodes;
}

int KhopSubgraph::local_of(int global_node) const {
  if (global_node < 0 || global_node >= static_cast<int>(to_local.size())) return -1;
  return to_local[global_node];
}

KhopSubgraph extract_khop(const Graph& g, int v, int k) {
  KhopSubgraph sub;
  sub.nodes = khop_nodes(g, v, k);
  const int m = static_cast<int>(sub.nodes.size());
  sub.to_local.assign(g.num_nodes(), -1);
  for (int i = 0; i < m; ++i) sub.to_local[sub.nodes[i]] = i;

  Matrix x(m, g.num_features());
  Matrix a(m, m);
  std::vector<int> labels;
  for (int i = 0; i < m; ++i) {
    x.row(i) = g.x.row(sub.nodes[i]);
    for (int j = 0; j < m; ++j) a(i, j) = g.a(sub.nodes[i], sub.nodes[j]);
  }
  if (g.has_labels()) {
    labels.reserve(m);
    for (int i = 0; i < m; ++i) labels.push_back(g.labels[sub.nodes[i]]);
  }
  sub.graph = Graph::make(std::move(x), std::move(a), std::move(labels));
  return sub;
}

}  // namespace gef
