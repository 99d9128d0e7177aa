#pragma once

#include <string>
#include <vector>

#include "gef/graph.hpp"
#include "gef/rng.hpp"

namespace gef {

enum class LayerKind { GraphConv, Dense };

struct Layer {
  LayerKind kind = LayerKind::GraphConv;
  Matrix w;  // d_in x d_out
  Vector b;  // d_out
  bool relu_after = false;
};

// Stack of graph convolutions (H -> N(A) H W + b) and dense layers, with
// optional ReLU after each. With concat_conv_outputs set, the post-activation
// outputs of every convolution are concatenated and fed to a single trailing
// dense layer.
struct GcnModel {
  std::vector<Layer> layers;
  bool concat_conv_outputs = false;

  int num_conv_layers() const;
  int output_dim() const;
  int input_dim() const;
  void validate(int d_in) const;

  // 2 conv layers, no dense; ReLU between.
  static GcnModel citation_preset(int d_in, int classes, int hidden, RandomStream& rng);
  // 3 conv layers with concatenated outputs into a final dense layer.
  static GcnModel ba_shapes_preset(int d_in, int classes, int hidden, RandomStream& rng);
};

// Scalar quantity of interest F(X, A) = e_v^T f(X, A) at class_index.
struct QuantityOfInterest {
  NodeSelector selector;
  int class_index = 0;
};

struct ForwardCache {
  Matrix n;                          // N(A)
  std::vector<Matrix> inputs;        // layer inputs
  std::vector<Matrix> pre;           // pre-activation outputs
  std::vector<Matrix> conv_outputs;  // post-activation conv outputs
  Matrix output;                     // n x C
};

// Full per-node logits. Throws NumericalError naming the layer on a
// non-finite intermediate.
Matrix forward_all(const GcnModel& m, const Graph& g, ForwardCache* cache = nullptr);

double forward(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi,
               ForwardCache* cache = nullptr);

struct InputGradients {
  Matrix dx;  // n x d
  Matrix da;  // n x n, through N(A) including the degree matrix
};

struct ParamGradients {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
};

// Reverse-mode pass for an arbitrary output cotangent dout (n x C).
// Either gradient sink may be null.
void backward(const GcnModel& m, const Graph& g, const ForwardCache& cache,
              const Matrix& dout, InputGradients* gin, ParamGradients* gparam);

// Exact gradients of the scalar QoI w.r.t. X and A.
InputGradients grad_input(const GcnModel& m, const Graph& g, const QuantityOfInterest& qoi);

// ReLU on/off states per activated layer; the derivative at exactly 0 is 0,
// and 0 counts as OFF.
struct ActivationPattern {
  std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> masks;
  bool operator==(const ActivationPattern& other) const;
};

ActivationPattern activation_pattern(const GcnModel& m, const Graph& g);

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int checkpoint_every = 0;  // 0 disables snapshots
  std::uint64_t seed = 0;
};

struct Checkpoint {
  int epoch = 0;
  double test_accuracy = 0.0;
  GcnModel model;
};

struct TrainResult {
  GcnModel model;
  std::vector<Checkpoint> checkpoints;
  std::vector<double> loss_history;
  bool diverged = false;
};

// Full-batch cross-entropy training on train-mask nodes. On divergence the
// result carries the last finite-loss parameters and diverged = true.
TrainResult train(GcnModel m, const Graph& g, const TrainConfig& cfg);

double accuracy(const GcnModel& m, const Graph& g, const std::vector<std::uint8_t>& mask);

int predict_class(const GcnModel& m, const Graph& g, int v);

}  // namespace gef
