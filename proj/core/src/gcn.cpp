#include "gef/gcn.hpp"

#include <cmath>
#include <limits>

namespace gef {

namespace {

Matrix glorot(int rows, int cols, RandomStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
  }
  return w;
}

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

}  // namespace

int GcnModel::num_conv_layers() const {
  int m = 0;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::GraphConv) ++m;
  }
  return m;
}

int GcnModel::output_dim() const {
  if (layers.empty()) throw ContractError("GcnModel: no layers");
  return static_cast<int>(layers.back().w.cols());
}

int GcnModel::input_dim() const {
  if (layers.empty()) throw ContractError("GcnModel: no layers");
  return static_cast<int>(layers.front().w.rows());
}

void GcnModel::validate(int d_in) const {
  if (layers.empty()) throw ContractError("GcnModel: no layers");
  if (concat_conv_outputs) {
    if (num_conv_layers() < 1) {
      throw ContractError("GcnModel: concat architecture needs at least one conv layer");
    }
    // Expected shape: M convs followed by exactly one dense layer.
    const int m = static_cast<int>(layers.size());
    if (layers[m - 1].kind != LayerKind::Dense) {
      throw ContractError("GcnModel: concat architecture requires a trailing dense layer");
    }
    int concat_dim = 0;
    for (int i = 0; i < m - 1; ++i) {
      if (layers[i].kind != LayerKind::GraphConv) {
        throw ContractError("GcnModel: concat architecture allows only conv layers before dense");
      }
      concat_dim += static_cast<int>(layers[i].w.cols());
    }
    if (layers[m - 1].w.rows() != concat_dim) {
      throw ContractError("GcnModel: dense input dim must equal concatenated conv dims");
    }
  } else {
    for (std::size_t i = 1; i < layers.size(); ++i) {
      if (layers[i].w.rows() != layers[i - 1].w.cols()) {
        throw ContractError("GcnModel: adjacent layer dimensions disagree");
      }
    }
  }
  if (layers.front().w.rows() != d_in) {
    throw ContractError("GcnModel: input dimension does not match graph features");
  }
  for (const auto& l : layers) {
    if (l.b.size() != l.w.cols()) throw ContractError("GcnModel: bias dimension mismatch");
  }
}

GcnModel GcnModel::citation_preset(int d_in, int classes, int hidden, RandomStream& rng) {
  GcnModel m;
  m.layers.push_back({LayerKind::GraphConv, glorot(d_in, hidden, rng), Vector::Zero(hidden), true});
  m.layers.push_back({LayerKind::GraphConv, glorot(hidden, classes, rng), Vector::Zero(classes), false});
  return m;
}

GcnModel GcnModel::ba_shapes_preset(int d_in, int classes, int hidden, RandomStream& rng) {
  GcnModel m;
  m.concat_conv_outputs = true;
  m.layers.push_back({LayerKind::GraphConv, glorot(d_in, hidden, rng), Vector::Zero(hidden), true});
  m.layers.push_back({LayerKind::GraphConv, glorot(hidden, hidden, rng), Vector::Zero(hidden), true});
  m.layers.push_back({LayerKind::GraphConv, glorot(hidden, hidden, rng), Vector::Zero(hidden), true});
  m.layers.push_back({LayerKind::Dense, glorot(3 * hidden, classes, rng), Vector::Zero(classes), false});
  return m;
}

Matrix forward_all(const GcnModel& m, const Graph& g, ForwardCache* cache) {
  m.validate(g.num_features());
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.inputs.clear();
  c.pre.clear();
  c.conv_outputs.clear();
  c.n = normalize_adjacency(g.a);

  Matrix h = g.x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& layer = m.layers[i];
    Matrix input;
    if (m.concat_conv_outputs && layer.kind == LayerKind::Dense) {
      Eigen::Index total = 0;
      for (const auto& out : c.conv_outputs) total += out.cols();
      input.resize(h.rows(), total);
      Eigen::Index col = 0;
      for (const auto& out : c.conv_outputs) {
        input.middleCols(col, out.cols()) = out;
        col += out.cols();
      }
    } else {
      input = h;
    }
    Matrix z;
    if (layer.kind == LayerKind::GraphConv) {
      z = c.n * (input * layer.w);
    } else {
      z = input * layer.w;
    }
    z.rowwise() += layer.b.transpose();
    if (!z.allFinite()) {
      throw NumericalError("forward: non-finite intermediate at layer " + std::to_string(i));
    }
    c.inputs.push_back(std::move(input));
    c.pre.push_back(z);
    h = layer.relu_after ? relu(z) : std::move(z);
    if (layer.kind == LayerKind::GraphConv) c.conv_outputs.push_back(h);
  }
  c.output = h;
  return c.output;
}

double forward(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
               ForwardCache* cache) {
  qoi.selector.validate();
  if (qoi.selector.weights.size() != g.num_nodes()) {
    throw ContractError("forward: selector length mismatch");
  }
  Matrix out = forward_all(m, g, cache);
  if (qoi.class_index < 0 || qoi.class_index >= out.cols()) {
    throw ContractError("forward: class index out of range");
  }
  return qoi.selector.weights.dot(out.col(qoi.class_index));
}

void backward(const GcnModel& m, const Graph& g, const ForwardCache& cache,
              const Matrix& dout, InputGradients* gin, ParamGradients* gparam) {
  const int num_layers = static_cast<int>(m.layers.size());
  if (static_cast<int>(cache.pre.size()) != num_layers) {
    throw ContractError("backward: cache does not match model");
  }
  if (gparam) {
    gparam->dw.assign(num_layers, Matrix());
    gparam->db.assign(num_layers, Vector());
  }

  Matrix dn = Matrix::Zero(cache.n.rows(), cache.n.cols());
  // Cotangents pending for each conv layer's post-activation output.
  std::vector<Matrix> conv_cotangent(cache.conv_outputs.size());
  Matrix dh = dout;
  Matrix dx;

  int conv_index = static_cast<int>(cache.conv_outputs.size());
  for (int i = num_layers - 1; i >= 0; --i) {
    const Layer& layer = m.layers[i];
    if (layer.kind == LayerKind::GraphConv) {
      --conv_index;
      if (conv_cotangent[conv_index].size() > 0) {
        if (dh.size() > 0) {
          dh += conv_cotangent[conv_index];
        } else {
          dh = conv_cotangent[conv_index];
        }
      }
    }
    Matrix dz = layer.relu_after
                    ? (cache.pre[i].array() > 0.0).select(dh, Matrix::Zero(dh.rows(), dh.cols()))
                    : dh;
    const Matrix& input = cache.inputs[i];
    Matrix dinput;
    if (layer.kind == LayerKind::GraphConv) {
      Matrix p = input * layer.w;
      dn.noalias() += dz * p.transpose();
      Matrix dp = cache.n.transpose() * dz;
      if (gparam) {
        gparam->dw[i] = input.transpose() * dp;
        gparam->db[i] = dz.colwise().sum();
      }
      dinput.noalias() = dp * layer.w.transpose();
    } else {
      if (gparam) {
        gparam->dw[i] = input.transpose() * dz;
        gparam->db[i] = dz.colwise().sum();
      }
      dinput.noalias() = dz * layer.w.transpose();
    }
    if (m.concat_conv_outputs && layer.kind == LayerKind::Dense) {
      // Route concat slices back to the conv outputs they came from.
      Eigen::Index col = 0;
      for (std::size_t k = 0; k < cache.conv_outputs.size(); ++k) {
        const Eigen::Index width = cache.conv_outputs[k].cols();
        conv_cotangent[k] = dinput.middleCols(col, width);
        col += width;
      }
      dh.resize(0, 0);
    } else if (i == 0) {
      dx = dinput;
    } else {
      dh = std::move(dinput);
    }
  }

  if (gin) {
    gin->dx = dx.size() > 0 ? dx : Matrix::Zero(g.x.rows(), g.x.cols());
    gin->da = normalize_adjacency_backward(g.a, dn);
  }
}

InputGradients grad_input(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi) {
  ForwardCache cache;
  forward(m, g, qoi, &cache);
  Matrix dout = Matrix::Zero(cache.output.rows(), cache.output.cols());
  dout.col(qoi.class_index) = qoi.selector.weights;
  InputGradients gin;
  backward(m, g, cache, dout, &gin, nullptr);
  return gin;
}

bool ActivationPattern::operator==(const ActivationPattern& other) const {
  if (masks.size() != other.masks.size()) return false;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].rows() != other.masks[i].rows() ||
        masks[i].cols() != other.masks[i].cols()) {
      return false;
    }
    if (!(masks[i] == other.masks[i]).all()) return false;
  }
  return true;
}

ActivationPattern activation_pattern(const GcnModel& m, const Graph& g) {
  ForwardCache cache;
  forward_all(m, g, &cache);
  ActivationPattern pattern;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (!m.layers[i].relu_after) continue;
    pattern.masks.push_back(cache.pre[i].array() > 0.0);
  }
  return pattern;
}

namespace {

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  int step = 0;
};

double masked_cross_entropy(const Matrix& logits, const Graph& g, Matrix* dout) {
  int count = 0;
  double loss = 0.0;
  if (dout) *dout = Matrix::Zero(logits.rows(), logits.cols());
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!g.train_mask[v]) continue;
    ++count;
  }
  if (count == 0) throw ContractError("train: empty train mask");
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!g.train_mask[v]) continue;
    Vector row = logits.row(v).transpose();
    const double mx = row.maxCoeff();
    Vector ex = (row.array() - mx).exp();
    const double z = ex.sum();
    const int y = g.labels[v];
    loss += -(row[y] - mx - std::log(z));
    if (dout) {
      Vector grad = ex / z;
      grad[y] -= 1.0;
      dout->row(v) = grad.transpose() / static_cast<double>(count);
    }
  }
  return loss / static_cast<double>(count);
}

}  // namespace

TrainResult train(GcnModel m, const Graph& g, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ContractError("train: epochs must be >= 1");
  if (cfg.lr <= 0.0) throw ContractError("train: lr must be > 0");
  if (!g.has_labels() || g.train_mask.empty()) {
    throw ContractError("train: labels and train mask required");
  }
  m.validate(g.num_features());

  TrainResult result;
  AdamState adam;
  const int num_layers = static_cast<int>(m.layers.size());
  adam.mw.resize(num_layers);
  adam.vw.resize(num_layers);
  adam.mb.resize(num_layers);
  adam.vb.resize(num_layers);
  for (int i = 0; i < num_layers; ++i) {
    adam.mw[i] = Matrix::Zero(m.layers[i].w.rows(), m.layers[i].w.cols());
    adam.vw[i] = adam.mw[i];
    adam.mb[i] = Vector::Zero(m.layers[i].b.size());
    adam.vb[i] = adam.mb[i];
  }

  auto snapshot = [&](int epoch) {
    Checkpoint ck;
    ck.epoch = epoch;
    ck.model = m;
    ck.test_accuracy = g.test_mask.empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : accuracy(m, g, g.test_mask);
    result.checkpoints.push_back(std::move(ck));
  };

  if (cfg.checkpoint_every > 0) snapshot(0);
  GcnModel last_good = m;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ForwardCache cache;
    Matrix logits = forward_all(m, g, &cache);
    Matrix dout;
    const double loss = masked_cross_entropy(logits, g, &dout);
    if (!std::isfinite(loss)) {
      result.diverged = true;
      m = last_good;
      break;
    }
    last_good = m;
    result.loss_history.push_back(loss);

    ParamGradients grads;
    backward(m, g, cache, dout, nullptr, &grads);
    for (int i = 0; i < num_layers; ++i) {
      grads.dw[i] += cfg.weight_decay * m.layers[i].w;
    }

    if (cfg.optimizer == OptimizerKind::Sgd) {
      for (int i = 0; i < num_layers; ++i) {
        m.layers[i].w -= cfg.lr * grads.dw[i];
        m.layers[i].b -= cfg.lr * grads.db[i];
      }
    } else {
      const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
      ++adam.step;
      const double bc1 = 1.0 - std::pow(beta1, adam.step);
      const double bc2 = 1.0 - std::pow(beta2, adam.step);
      for (int i = 0; i < num_layers; ++i) {
        adam.mw[i] = beta1 * adam.mw[i] + (1.0 - beta1) * grads.dw[i];
        adam.vw[i] = beta2 * adam.vw[i].array() + (1.0 - beta2) * grads.dw[i].array().square();
        adam.mb[i] = beta1 * adam.mb[i] + (1.0 - beta1) * grads.db[i];
        adam.vb[i] = beta2 * adam.vb[i].array() + (1.0 - beta2) * grads.db[i].array().square();
        m.layers[i].w.array() -=
            cfg.lr * (adam.mw[i].array() / bc1) / ((adam.vw[i].array() / bc2).sqrt() + eps);
        m.layers[i].b.array() -=
            cfg.lr * (adam.mb[i].array() / bc1) / ((adam.vb[i].array() / bc2).sqrt() + eps);
      }
    }

    if (cfg.checkpoint_every > 0 &&
        (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)) {
      snapshot(epoch);
    }
  }

  result.model = std::move(m);
  return result;
}

double accuracy(const GcnModel& m, const Graph& g, const std::vector<std::uint8_t>& mask) {
  if (!g.has_labels()) throw ContractError("accuracy: labels required");
  Matrix logits = forward_all(m, g);
  int correct = 0, total = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!mask.empty() && !mask[v]) continue;
    Eigen::Index pred;
    logits.row(v).maxCoeff(&pred);
    if (static_cast<int>(pred) == g.labels[v]) ++correct;
    ++total;
  }
  if (total == 0) throw ContractError("accuracy: empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

int predict_class(const GcnModel& m, const Graph& g, int v) {
  if (v < 0 || v >= g.num_nodes()) throw ContractError("predict_class: node out of range");
  Matrix logits = forward_all(m, g);
  Eigen::Index pred;
  logits.row(v).maxCoeff(&pred);
  return static_cast<int>(pred);
}

}  // namespace gef
