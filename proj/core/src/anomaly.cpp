#include "gef/anomaly.hpp"

#include <algorithm>
#include <cmath>

#include "gef/rng.hpp"

namespace gef {

namespace {

void check_series(const SensorSeries& series, int window) {
  if (window < 1) throw ContractError("sensor: window must be >= 1");
  if (series.num_steps() < window + 1) {
    throw ContractError("sensor: series shorter than window + 1");
  }
  if (!series.readings.allFinite()) throw ContractError("sensor: non-finite readings");
  if (series.topology.num_nodes() != series.num_sensors()) {
    throw ContractError("sensor: topology/readings sensor count mismatch");
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? (1.0 - frac) * v[lo] + frac * v[lo + 1] : v[lo];
  };
  return at(0.75) - at(0.25);
}

// Raw per-node deviation |forecast(t-1) - reading(t)| for observation time t.
Vector deviation_at(const GcnModel& m, const SensorSeries& series, int t, int window) {
  Vector pred = forecast(m, series, t - 1, window);
  return (pred - series.readings.col(t)).cwiseAbs();
}

}  // namespace

SensorSeries gen_sensor_data(std::uint64_t seed, int s, int t_steps) {
  if (s < 3) throw ContractError("gen_sensor_data: need at least 3 sensors");
  if (t_steps < 2) throw ContractError("gen_sensor_data: need at least 2 timesteps");
  RandomStream rng(seed, static_cast<std::uint64_t>(StreamPurpose::Data));

  // Ring plus a few random chords so k-hop neighborhoods are non-trivial.
  Matrix a = Matrix::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    const int j = (i + 1) % s;
    a(i, j) = a(j, i) = 1.0;
  }
  const int chords = std::max(1, s / 4);
  int added = 0;
  while (added < chords) {
    const int i = static_cast<int>(rng.below(s));
    const int j = static_cast<int>(rng.below(s));
    if (i == j || a(i, j) != 0.0) continue;
    a(i, j) = a(j, i) = 1.0;
    ++added;
  }

  // Coupled AR(1) around a shared operating level: each sensor relaxes toward
  // a mix of its own state, its neighborhood mean, and a sinusoidal drive.
  // Drives share one plant-wide phase (with per-sensor jitter) so neighboring
  // readings stay correlated, and the nonzero base level makes tampering
  // (clamp-to-zero, constant spoof) stand out against normal operation.
  const double base = 1.5;
  const double global_phase = rng.uniform() * 2.0 * M_PI;
  Vector phase(s), amp(s);
  for (int i = 0; i < s; ++i) {
    phase(i) = global_phase + rng.normal(0.0, 0.15);
    amp(i) = 0.8 + 0.4 * rng.uniform();
  }
  Matrix state(s, t_steps);
  for (int i = 0; i < s; ++i) state(i, 0) = rng.normal(0.0, 0.3);
  for (int t = 1; t < t_steps; ++t) {
    for (int i = 0; i < s; ++i) {
      double neighbor_sum = 0.0;
      double degree = 0.0;
      for (int j = 0; j < s; ++j) {
        if (a(i, j) != 0.0) {
          neighbor_sum += state(j, t - 1);
          degree += 1.0;
        }
      }
      const double drive = amp(i) * std::sin(0.3 * t + phase(i));
      state(i, t) = 0.5 * state(i, t - 1) + 0.3 * neighbor_sum / degree +
                    0.2 * drive + rng.normal(0.0, 0.05);
    }
  }

  SensorSeries series;
  series.topology = Graph::make(Matrix::Zero(s, 1), std::move(a));
  series.readings = state.array() + base;
  series.attack.assign(t_steps, 0);
  series.attacked_node.assign(t_steps, -1);
  return series;
}

void inject_attack(SensorSeries& series, AttackKind kind, int node, int t_start, int t_len,
                   double spoof_offset) {
  const int t_steps = series.num_steps();
  if (node < 0 || node >= series.num_sensors()) throw ContractError("inject_attack: bad node");
  if (t_start < 1 || t_len < 1 || t_start + t_len > t_steps) {
    throw ContractError("inject_attack: segment out of range");
  }
  const double hold = series.readings(node, t_start - 1) + spoof_offset;
  for (int t = t_start; t < t_start + t_len; ++t) {
    series.readings(node, t) = kind == AttackKind::ZeroClamp ? 0.0 : hold;
    series.attack[t] = 1;
    series.attacked_node[t] = node;
  }
}

Graph window_graph(const SensorSeries& series, int t, int window) {
  check_series(series, window);
  if (t < window - 1 || t >= series.num_steps()) {
    throw ContractError("window_graph: window does not fit at t");
  }
  const int s = series.num_sensors();
  Matrix x(s, window);
  for (int k = 0; k < window; ++k) x.col(k) = series.readings.col(t - window + 1 + k);
  Graph g;
  g.x = std::move(x);
  g.a = series.topology.a;
  return g;
}

Vector forecast(const GcnModel& m, const SensorSeries& series, int t, int window) {
  Graph g = window_graph(series, t, window);
  return forward_all(m, g).col(0);
}

double forecast_mse(const GcnModel& m, const SensorSeries& series, int t_begin, int t_end,
                    int window) {
  if (t_begin < window || t_end > series.num_steps() || t_begin >= t_end) {
    throw ContractError("forecast_mse: bad target range");
  }
  double sum = 0.0;
  long count = 0;
  for (int t = t_begin; t < t_end; ++t) {
    Vector err = forecast(m, series, t - 1, window) - series.readings.col(t);
    sum += err.squaredNorm();
    count += err.size();
  }
  return sum / static_cast<double>(count);
}

GcnModel train_forecaster(const SensorSeries& series, const ForecasterConfig& cfg,
                          int train_end) {
  check_series(series, cfg.window);
  if (train_end < cfg.window + 1 || train_end > series.num_steps()) {
    throw ContractError("train_forecaster: bad training range");
  }
  const int s = series.num_sensors();
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Init));
  GcnModel m = GcnModel::citation_preset(cfg.window, 1, cfg.hidden, rng);

  const int num_layers = static_cast<int>(m.layers.size());
  std::vector<Matrix> mw(num_layers), vw(num_layers);
  std::vector<Vector> mb(num_layers), vb(num_layers);
  for (int i = 0; i < num_layers; ++i) {
    mw[i] = Matrix::Zero(m.layers[i].w.rows(), m.layers[i].w.cols());
    vw[i] = mw[i];
    mb[i] = Vector::Zero(m.layers[i].b.size());
    vb[i] = mb[i];
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  const int first_t = cfg.window - 1;          // earliest window end
  const int n_graphs = train_end - 1 - first_t;  // targets first_t+1 .. train_end-1
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Matrix> sum_dw(num_layers);
    std::vector<Vector> sum_db(num_layers);
    for (int i = 0; i < num_layers; ++i) {
      sum_dw[i] = Matrix::Zero(m.layers[i].w.rows(), m.layers[i].w.cols());
      sum_db[i] = Vector::Zero(m.layers[i].b.size());
    }
    double loss = 0.0;
    for (int t = first_t; t + 1 < train_end; ++t) {
      Graph g = window_graph(series, t, cfg.window);
      ForwardCache cache;
      forward_all(m, g, &cache);
      Vector err = cache.output.col(0) - series.readings.col(t + 1);
      loss += err.squaredNorm() / static_cast<double>(s * n_graphs);
      Matrix dout = (2.0 / static_cast<double>(s * n_graphs)) * err;
      ParamGradients grads;
      backward(m, g, cache, dout, nullptr, &grads);
      for (int i = 0; i < num_layers; ++i) {
        sum_dw[i] += grads.dw[i];
        sum_db[i] += grads.db[i];
      }
    }
    if (!std::isfinite(loss)) throw NumericalError("train_forecaster: loss diverged");
    const double bc1 = 1.0 - std::pow(beta1, epoch + 1);
    const double bc2 = 1.0 - std::pow(beta2, epoch + 1);
    for (int i = 0; i < num_layers; ++i) {
      mw[i] = beta1 * mw[i] + (1.0 - beta1) * sum_dw[i];
      vw[i] = beta2 * vw[i].array() + (1.0 - beta2) * sum_dw[i].array().square();
      mb[i] = beta1 * mb[i] + (1.0 - beta1) * sum_db[i];
      vb[i] = beta2 * vb[i].array() + (1.0 - beta2) * sum_db[i].array().square();
      m.layers[i].w.array() -= cfg.lr * (mw[i].array() / bc1) / ((vw[i].array() / bc2).sqrt() + eps);
      m.layers[i].b.array() -= cfg.lr * (mb[i].array() / bc1) / ((vb[i].array() / bc2).sqrt() + eps);
    }
  }
  return m;
}

DetectionResult detect(const SensorSeries& series, const GcnModel& m,
                       const DetectorConfig& cfg) {
  check_series(series, cfg.window);
  const int t_steps = series.num_steps();
  if (cfg.train_end < cfg.window || cfg.val_end <= cfg.train_end || cfg.val_end > t_steps) {
    throw ContractError("detect: bad train/validation split");
  }
  if (cfg.val_end - cfg.train_end < cfg.window + 1) {
    throw ContractError("detect: validation segment shorter than window + 1");
  }
  const int s = series.num_sensors();

  // Per-node validation deviations: calibrate normalization and threshold.
  std::vector<std::vector<double>> val_dev(s);
  for (int t = cfg.train_end + cfg.window; t < cfg.val_end; ++t) {
    Vector dev = deviation_at(m, series, t, cfg.window);
    for (int i = 0; i < s; ++i) val_dev[i].push_back(dev(i));
  }
  Vector center = Vector::Zero(s), scale = Vector::Ones(s);
  if (cfg.normalize) {
    for (int i = 0; i < s; ++i) {
      center(i) = median_of(val_dev[i]);
      scale(i) = iqr_of(val_dev[i]) + 1e-12;
    }
  }
  auto normalized_max = [&](const Vector& dev, int* argmax) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < s; ++i) {
      const double d = (dev(i) - center(i)) / scale(i);
      if (d > best) {
        best = d;
        if (argmax) *argmax = i;
      }
    }
    return best;
  };

  DetectionResult result;
  result.threshold = -std::numeric_limits<double>::infinity();
  for (int t = cfg.train_end + cfg.window; t < cfg.val_end; ++t) {
    Vector dev = deviation_at(m, series, t, cfg.window);
    result.threshold = std::max(result.threshold, normalized_max(dev, nullptr));
  }

  for (int t = cfg.val_end; t < t_steps; ++t) {
    Vector dev = deviation_at(m, series, t, cfg.window);
    int node = -1;
    const double worst = normalized_max(dev, &node);
    if (worst > result.threshold) {
      result.flags.push_back(AnomalyFlag{t, node, worst});
    }
  }
  return result;
}

Attribution explain_anomaly(const GcnModel& m, const SensorSeries& series,
                            const DetectionResult& result, int t, AnomalyMethod method,
                            const DetectorConfig& cfg, const PerturbationDistribution& dist,
                            int n_samples, std::uint64_t seed) {
  auto it = std::find_if(result.flags.begin(), result.flags.end(),
                         [t](const AnomalyFlag& f) { return f.t == t; });
  if (it == result.flags.end()) {
    throw ContractError("explain_anomaly: timestep is not flagged");
  }
  Graph g = window_graph(series, t - 1, cfg.window);
  QuantityOfInterest qoi{NodeSelector::one_hot(series.num_sensors(), it->node), 0};
  switch (method) {
    case AnomalyMethod::Sm:
      return saliency(m, g, qoi);
    case AnomalyMethod::Kec: {
      KecModel kec = kec_solve(m, g, qoi, dist, n_samples, seed);
      return kec_attribute(kec, g);
    }
    case AnomalyMethod::Softmask: {
      SoftMaskConfig sm_cfg;
      sm_cfg.seed = seed;
      SoftMask mask = softmask_explain(m, g, it->node, sm_cfg);
      return softmask_attribution(mask, g);
    }
  }
  throw ContractError("explain_anomaly: unknown method");
}

}  // namespace gef
