#pragma once

#include <string>
#include <vector>

#include "gef/anomaly.hpp"
#include "gef/experiment.hpp"
#include "gef/explain.hpp"
#include "gef/gcn.hpp"
#include "gef/graph.hpp"

namespace gef {

// Graph JSON: {"n", "d", "x", "edges": [[src, dst, weight], ...], "labels",
// "train_mask", "val_mask", "test_mask"}. Edges absent from the list have
// weight zero; labels and masks are optional.
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

// Checkpoint JSON: layer shapes with row-major weights, plus epoch and
// test-accuracy metadata.
Checkpoint load_checkpoint(const std::string& path);
void save_checkpoint(const Checkpoint& ck, const std::string& path);

// A checkpoint list stored as one JSON array file.
std::vector<Checkpoint> load_checkpoints(const std::string& path);
void save_checkpoints(const std::vector<Checkpoint>& cks, const std::string& path);

// Attribution JSON: method metadata, dense phi_x, sparse phi_a triplets.
Attribution load_attribution(const std::string& path);
void save_attribution(const Attribution& attr, const std::string& path);

// Graphviz DOT: blue edges for positive scores, red for negative, with
// opacity and pen width proportional to |score| / max |score|.
std::string attribution_dot(const Attribution& attr, const Graph& g);
void save_dot(const Attribution& attr, const Graph& g, const std::string& path);

// Sensor series JSON: topology edges + readings + attack labels.
SensorSeries load_sensor_series(const std::string& path);
void save_sensor_series(const SensorSeries& series, const std::string& path);

// Experiment result JSON (rows + aggregate) and sweep CSV.
void save_result(const ExperimentResult& result, const std::string& path);
std::string sweep_csv(const std::vector<SweepRow>& sweep);
void save_sweep_csv(const std::vector<SweepRow>& sweep, const std::string& path);

}  // namespace gef
