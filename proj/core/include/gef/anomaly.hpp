#pragma once

#include <cstdint>
#include <vector>

#include "gef/explain.hpp"
#include "gef/gcn.hpp"
#include "gef/graph.hpp"
#include "gef/perturb.hpp"

namespace gef {

// Multivariate sensor readings over a fixed coupling topology. Attack labels
// mark the timesteps whose readings were tampered with.
struct SensorSeries {
  Graph topology;                      // adjacency over s sensors; features unused
  Matrix readings;                     // s x T
  std::vector<std::uint8_t> attack;    // length T, 1 on attacked timesteps
  std::vector<int> attacked_node;      // length T, -1 when clean

  int num_sensors() const { return static_cast<int>(readings.rows()); }
  int num_steps() const { return static_cast<int>(readings.cols()); }
};

enum class AttackKind { ConstantSpoof, ZeroClamp };

// Coupled autoregressive readings on a ring-with-chords topology; no attacks.
SensorSeries gen_sensor_data(std::uint64_t seed, int s, int t_steps);

// Overwrite readings[node, t_start .. t_start+t_len) with an attack segment
// and label it. ConstantSpoof holds the pre-attack reading plus `spoof_offset`;
// ZeroClamp forces the reading to zero.
void inject_attack(SensorSeries& series, AttackKind kind, int node, int t_start, int t_len,
                   double spoof_offset = 1.5);

struct ForecasterConfig {
  int window = 5;     // inputs t-window+1 .. t predict t+1
  int hidden = 16;
  int epochs = 150;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

struct DetectorConfig {
  int window = 5;
  int train_end = 0;        // readings [0, train_end) train the forecaster
  int val_end = 0;          // readings [train_end, val_end) calibrate the threshold
  bool normalize = false;   // per-node median/IQR normalization of deviations
};

// Graph whose node features are the length-`window` reading history ending at
// timestep t (the forecaster input for predicting t+1).
Graph window_graph(const SensorSeries& series, int t, int window);

// One-step-ahead forecast for every sensor from the window ending at t.
Vector forecast(const GcnModel& m, const SensorSeries& series, int t, int window);

// Mean squared one-step forecast error over prediction targets in
// [t_begin, t_end).
double forecast_mse(const GcnModel& m, const SensorSeries& series, int t_begin, int t_end,
                    int window);

// Two-conv-layer forecaster trained with full-batch MSE on the attack-free
// prefix [window-1, cfg.train_end).
GcnModel train_forecaster(const SensorSeries& series, const ForecasterConfig& cfg,
                          int train_end);

struct AnomalyFlag {
  int t = -1;          // timestep of the anomalous observation
  int node = -1;       // argmax-deviation sensor
  double deviation = 0.0;
};

struct DetectionResult {
  double threshold = 0.0;
  std::vector<AnomalyFlag> flags;  // over timesteps in [val_end, T)
};

// Threshold = max (optionally normalized) deviation on the validation
// segment; a timestep is flagged iff its max-node deviation exceeds it.
DetectionResult detect(const SensorSeries& series, const GcnModel& m,
                       const DetectorConfig& cfg);

enum class AnomalyMethod { Sm, Kec, Softmask };

// Attribution of the flag at timestep t: QoI is the forecast output at the
// flagged node, inputs are the window features and the sensor adjacency.
// Delegates to the explain module on window_graph(series, t-1, window).
Attribution explain_anomaly(const GcnModel& m, const SensorSeries& series,
                            const DetectionResult& result, int t, AnomalyMethod method,
                            const DetectorConfig& cfg,
                            const PerturbationDistribution& dist =
                                PerturbationDistribution::parse("ux:0.2"),
                            int n_samples = 200, std::uint64_t seed = 0);

}  // namespace gef
