#pragma once

#include <vector>

#include "gef/gcn.hpp"
#include "gef/graph.hpp"
#include "gef/rng.hpp"

namespace gef::testhelp {

// Random directed graph with symmetric support, positive weights, and
// Gaussian features.
inline Graph random_graph(int n, int d, RandomStream& rng, double edge_prob = 0.4) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal(0.0, 1.0);
  }
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < edge_prob) {
        const double w = 0.5 + rng.uniform();
        a(i, j) = w;
        a(j, i) = w;
      }
    }
  }
  return Graph::make(std::move(x), std::move(a));
}

// Conv stack d_in -> widths[0] -> ... -> widths.back(), with ReLU between
// layers when requested (never after the last).
inline GcnModel random_conv_model(int d_in, const std::vector<int>& widths, bool relu_between,
                                  RandomStream& rng) {
  GcnModel m;
  int prev = d_in;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    Layer layer;
    layer.kind = LayerKind::GraphConv;
    layer.w.resize(prev, widths[l]);
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j) layer.w(i, j) = rng.normal(0.0, 0.6);
    }
    layer.b.resize(widths[l]);
    for (int j = 0; j < widths[l]; ++j) layer.b(j) = rng.normal(0.0, 0.1);
    layer.relu_after = relu_between && l + 1 < widths.size();
    m.layers.push_back(std::move(layer));
    prev = widths[l];
  }
  return m;
}

// Central finite difference of the QoI w.r.t. one feature entry.
inline double fd_x(const GcnModel& m, Graph g, const QuantityOfInterest& qoi, int i, int j,
                   double h = 1e-5) {
  const double orig = g.x(i, j);
  g.x(i, j) = orig + h;
  const double up = forward(m, g, qoi);
  g.x(i, j) = orig - h;
  const double down = forward(m, g, qoi);
  g.x(i, j) = orig;
  return (up - down) / (2.0 * h);
}

// Central finite difference of the QoI w.r.t. one adjacency entry.
inline double fd_a(const GcnModel& m, Graph g, const QuantityOfInterest& qoi, int i, int j,
                   double h = 1e-5) {
  const double orig = g.a(i, j);
  g.a(i, j) = orig + h;
  const double up = forward(m, g, qoi);
  g.a(i, j) = orig - h;
  const double down = forward(m, g, qoi);
  g.a(i, j) = orig;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double got, double want, double floor = 1e-8) {
  const double denom = std::max(std::abs(want), floor);
  return std::abs(got - want) / denom;
}

}  // namespace gef::testhelp
