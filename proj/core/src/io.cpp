#include "gef/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gef {

namespace {

using json = nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw IoError("malformed JSON in '" + path + "': " + ex.what());
  }
  return j;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_matrix(const json& rows, Eigen::Index expect_rows, Eigen::Index expect_cols,
                   const std::string& what) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expect_rows) {
    throw IoError(what + ": expected " + std::to_string(expect_rows) + " rows");
  }
  Matrix m(expect_rows, expect_cols);
  for (Eigen::Index i = 0; i < expect_rows; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expect_cols) {
      throw IoError(what + ": bad row length at row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < expect_cols; ++j) m(i, j) = row[j].get<double>();
  }
  return m;
}

std::vector<std::uint8_t> mask_from(const json& j, const char* key, int n) {
  if (!j.contains(key)) return {};
  std::vector<std::uint8_t> mask;
  for (const auto& v : j.at(key)) mask.push_back(v.get<int>() != 0 ? 1 : 0);
  if (static_cast<int>(mask.size()) != n) {
    throw IoError(std::string(key) + ": wrong length");
  }
  return mask;
}

json mask_to(const std::vector<std::uint8_t>& mask) {
  json out = json::array();
  for (auto v : mask) out.push_back(static_cast<int>(v));
  return out;
}

json model_to_json(const GcnModel& m) {
  json layers = json::array();
  for (const auto& layer : m.layers) {
    json jl;
    jl["kind"] = layer.kind == LayerKind::GraphConv ? "conv" : "dense";
    jl["rows"] = layer.w.rows();
    jl["cols"] = layer.w.cols();
    json w = json::array();
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j) w.push_back(layer.w(i, j));
    }
    jl["w"] = std::move(w);
    json b = json::array();
    for (Eigen::Index j = 0; j < layer.b.size(); ++j) b.push_back(layer.b(j));
    jl["b"] = std::move(b);
    jl["relu_after"] = layer.relu_after;
    layers.push_back(std::move(jl));
  }
  json jm;
  jm["layers"] = std::move(layers);
  jm["concat_conv_outputs"] = m.concat_conv_outputs;
  return jm;
}

GcnModel model_from_json(const json& jm) {
  GcnModel m;
  m.concat_conv_outputs = jm.value("concat_conv_outputs", false);
  for (const auto& jl : jm.at("layers")) {
    Layer layer;
    const std::string kind = jl.at("kind").get<std::string>();
    if (kind == "conv") {
      layer.kind = LayerKind::GraphConv;
    } else if (kind == "dense") {
      layer.kind = LayerKind::Dense;
    } else {
      throw IoError("unknown layer kind '" + kind + "'");
    }
    const Eigen::Index rows = jl.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = jl.at("cols").get<Eigen::Index>();
    const json& w = jl.at("w");
    if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
      throw IoError("layer weight array does not match its shape");
    }
    layer.w.resize(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) layer.w(i, j) = w[idx++].get<double>();
    }
    const json& b = jl.at("b");
    if (static_cast<Eigen::Index>(b.size()) != cols) {
      throw IoError("layer bias length does not match its shape");
    }
    layer.b.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j) layer.b(j) = b[j].get<double>();
    layer.relu_after = jl.value("relu_after", false);
    m.layers.push_back(std::move(layer));
  }
  if (m.layers.empty()) throw IoError("model has no layers");
  m.validate(m.layers.front().w.rows());
  return m;
}

json checkpoint_to_json(const Checkpoint& ck) {
  json j = model_to_json(ck.model);
  j["epoch"] = ck.epoch;
  j["test_accuracy"] = ck.test_accuracy;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint ck;
  ck.model = model_from_json(j);
  ck.epoch = j.value("epoch", 0);
  ck.test_accuracy = j.value("test_accuracy", 0.0);
  return ck;
}

}  // namespace

Graph load_graph(const std::string& path) {
  json j = read_json(path);
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  if (n < 1 || d < 1) throw IoError("graph: n and d must be positive");
  Matrix x = rows_matrix(j.at("x"), n, d, "graph features");
  Matrix a = Matrix::Zero(n, n);
  for (const auto& edge : j.at("edges")) {
    if (!edge.is_array() || edge.size() != 3) throw IoError("graph: bad edge triplet");
    const int src = edge[0].get<int>();
    const int dst = edge[1].get<int>();
    if (src < 0 || src >= n || dst < 0 || dst >= n) throw IoError("graph: edge out of range");
    a(src, dst) = edge[2].get<double>();
  }
  std::vector<int> labels;
  if (j.contains("labels")) {
    for (const auto& v : j.at("labels")) labels.push_back(v.get<int>());
    if (static_cast<int>(labels.size()) != n) throw IoError("graph: labels wrong length");
  }
  try {
    return Graph::make(std::move(x), std::move(a), std::move(labels),
                       mask_from(j, "train_mask", n), mask_from(j, "val_mask", n),
                       mask_from(j, "test_mask", n));
  } catch (const ContractError& ex) {
    throw IoError(std::string("graph: ") + ex.what());
  }
}

void save_graph(const Graph& g, const std::string& path) {
  json j;
  j["n"] = g.num_nodes();
  j["d"] = g.num_features();
  j["x"] = matrix_rows(g.x);
  json edges = json::array();
  for (int i = 0; i < g.num_nodes(); ++i) {
    for (int k = 0; k < g.num_nodes(); ++k) {
      if (g.a(i, k) != 0.0) edges.push_back(json::array({i, k, g.a(i, k)}));
    }
  }
  j["edges"] = std::move(edges);
  if (g.has_labels()) j["labels"] = g.labels;
  if (!g.train_mask.empty()) j["train_mask"] = mask_to(g.train_mask);
  if (!g.val_mask.empty()) j["val_mask"] = mask_to(g.val_mask);
  if (!g.test_mask.empty()) j["test_mask"] = mask_to(g.test_mask);
  write_json(j, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_json(path));
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  write_json(checkpoint_to_json(ck), path);
}

std::vector<Checkpoint> load_checkpoints(const std::string& path) {
  json j = read_json(path);
  if (!j.is_array()) throw IoError("checkpoint list: expected a JSON array");
  std::vector<Checkpoint> cks;
  for (const auto& item : j) cks.push_back(checkpoint_from_json(item));
  return cks;
}

void save_checkpoints(const std::vector<Checkpoint>& cks, const std::string& path) {
  json j = json::array();
  for (const auto& ck : cks) j.push_back(checkpoint_to_json(ck));
  write_json(j, path);
}

Attribution load_attribution(const std::string& path) {
  json j = read_json(path);
  Attribution attr;
  attr.method = j.value("method", "");
  attr.baseline = j.value("baseline", "");
  attr.sample_count = j.value("sample_count", 0);
  attr.seed = j.value("seed", std::uint64_t{0});
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  attr.phi_x = rows_matrix(j.at("phi_x"), n, d, "phi_x");
  attr.phi_a = Matrix::Zero(n, n);
  for (const auto& trip : j.at("phi_a")) {
    if (!trip.is_array() || trip.size() != 3) throw IoError("phi_a: bad triplet");
    const int src = trip[0].get<int>();
    const int dst = trip[1].get<int>();
    if (src < 0 || src >= n || dst < 0 || dst >= n) throw IoError("phi_a: index out of range");
    attr.phi_a(src, dst) = trip[2].get<double>();
  }
  return attr;
}

void save_attribution(const Attribution& attr, const std::string& path) {
  json j;
  j["method"] = attr.method;
  j["baseline"] = attr.baseline;
  j["sample_count"] = attr.sample_count;
  j["seed"] = attr.seed;
  j["n"] = attr.phi_a.rows();
  j["d"] = attr.phi_x.cols();
  j["phi_x"] = matrix_rows(attr.phi_x);
  json triplets = json::array();
  for (Eigen::Index i = 0; i < attr.phi_a.rows(); ++i) {
    for (Eigen::Index k = 0; k < attr.phi_a.cols(); ++k) {
      if (attr.phi_a(i, k) != 0.0) {
        triplets.push_back(json::array({i, k, attr.phi_a(i, k)}));
      }
    }
  }
  j["phi_a"] = std::move(triplets);
  write_json(j, path);
}

std::string attribution_dot(const Attribution& attr, const Graph& g) {
  const int n = g.num_nodes();
  double max_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (g.a(i, k) != 0.0) max_abs = std::max(max_abs, std::abs(attr.phi_a(i, k)));
    }
  }
  std::ostringstream out;
  out << "digraph attribution {\n";
  out << "  node [shape=circle, fontsize=10];\n";
  for (int i = 0; i < n; ++i) out << "  n" << i << ";\n";
  out << std::fixed << std::setprecision(4);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (g.a(i, k) == 0.0) continue;
      const double score = attr.phi_a(i, k);
      const double rel = max_abs > 0.0 ? std::abs(score) / max_abs : 0.0;
      const char* color = score >= 0.0 ? "#0000ff" : "#ff0000";
      const int alpha = std::clamp(static_cast<int>(std::lround(255.0 * rel)), 16, 255);
      out << "  n" << i << " -> n" << k << " [color=\"" << color << std::hex
          << std::setw(2) << std::setfill('0') << alpha << std::dec << std::setfill(' ')
          << "\", penwidth=" << 0.5 + 4.5 * rel << ", label=\"" << score << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

void save_dot(const Attribution& attr, const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << attribution_dot(attr, g);
  if (!out) throw IoError("write failed for '" + path + "'");
}

SensorSeries load_sensor_series(const std::string& path) {
  json j = read_json(path);
  const int s = j.at("s").get<int>();
  const int t_steps = j.at("t").get<int>();
  if (s < 1 || t_steps < 1) throw IoError("sensor series: bad sizes");
  Matrix a = Matrix::Zero(s, s);
  for (const auto& edge : j.at("edges")) {
    if (!edge.is_array() || edge.size() != 3) throw IoError("sensor series: bad edge");
    a(edge[0].get<int>(), edge[1].get<int>()) = edge[2].get<double>();
  }
  SensorSeries series;
  series.topology = Graph::make(Matrix::Zero(s, 1), std::move(a));
  series.readings = rows_matrix(j.at("readings"), s, t_steps, "sensor readings");
  series.attack.assign(t_steps, 0);
  series.attacked_node.assign(t_steps, -1);
  if (j.contains("attack")) {
    const auto& att = j.at("attack");
    if (static_cast<int>(att.size()) != t_steps) throw IoError("sensor series: attack length");
    for (int t = 0; t < t_steps; ++t) series.attack[t] = att[t].get<int>() != 0 ? 1 : 0;
  }
  if (j.contains("attacked_node")) {
    const auto& nodes = j.at("attacked_node");
    if (static_cast<int>(nodes.size()) != t_steps) {
      throw IoError("sensor series: attacked_node length");
    }
    for (int t = 0; t < t_steps; ++t) series.attacked_node[t] = nodes[t].get<int>();
  }
  return series;
}

void save_sensor_series(const SensorSeries& series, const std::string& path) {
  json j;
  const int s = series.num_sensors();
  j["s"] = s;
  j["t"] = series.num_steps();
  json edges = json::array();
  for (int i = 0; i < s; ++i) {
    for (int k = 0; k < s; ++k) {
      if (series.topology.a(i, k) != 0.0) {
        edges.push_back(json::array({i, k, series.topology.a(i, k)}));
      }
    }
  }
  j["edges"] = std::move(edges);
  j["readings"] = matrix_rows(series.readings);
  json attack = json::array();
  for (auto v : series.attack) attack.push_back(static_cast<int>(v));
  j["attack"] = std::move(attack);
  j["attacked_node"] = series.attacked_node;
  write_json(j, path);
}

void save_result(const ExperimentResult& result, const std::string& path) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json jr;
    jr["node"] = row.node;
    jr["method"] = row.method;
    jr["dist"] = row.dist;
    jr["n_samples"] = row.n_samples;
    if (row.error.empty()) {
      jr["delta"] = row.delta;
      jr["explain_seconds"] = row.explain_seconds;
    } else {
      jr["error"] = row.error;
    }
    rows.push_back(std::move(jr));
  }
  json aggregate = json::array();
  for (const auto& [key, value] : result.aggregate) {
    aggregate.push_back({{"method", key.first}, {"dist", key.second}, {"mean_delta", value}});
  }
  json j;
  j["rows"] = std::move(rows);
  j["aggregate"] = std::move(aggregate);
  write_json(j, path);
}

std::string sweep_csv(const std::vector<SweepRow>& sweep) {
  std::vector<std::string> methods;
  for (const auto& row : sweep) {
    for (const auto& [method, unused] : row.mean_delta) {
      if (std::find(methods.begin(), methods.end(), method) == methods.end()) {
        methods.push_back(method);
      }
    }
  }
  std::ostringstream out;
  out << "epoch,test_accuracy";
  for (const auto& m : methods) out << ",delta_" << m << ",quality_" << m;
  out << '\n';
  out << std::setprecision(12);
  for (const auto& row : sweep) {
    out << row.epoch << ',' << row.test_accuracy;
    for (const auto& m : methods) {
      out << ',';
      if (auto it = row.mean_delta.find(m); it != row.mean_delta.end()) out << it->second;
      out << ',';
      if (auto it = row.mean_quality.find(m); it != row.mean_quality.end()) out << it->second;
    }
    out << '\n';
  }
  return out.str();
}

void save_sweep_csv(const std::vector<SweepRow>& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << sweep_csv(sweep);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace gef
