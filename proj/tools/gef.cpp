#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gef/anomaly.hpp"
#include "gef/datasets.hpp"
#include "gef/experiment.hpp"
#include "gef/io.hpp"

namespace {

using namespace gef;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GEF_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

struct CommonExplain {
  std::string graph_path, model_path;
  std::string dist_spec = "ua:0.5";
  int n_solve = 200;
  int n_eval = 500;
  double svd_threshold = 1e-4;
  std::uint64_t seed = default_seed();
};

void add_explain_flags(CLI::App* cmd, CommonExplain& opt) {
  cmd->add_option("--graph", opt.graph_path, "Graph JSON file")->required();
  cmd->add_option("--model", opt.model_path, "Model/checkpoint JSON file")->required();
  cmd->add_option("--dist", opt.dist_spec,
                  "Perturbation distribution (ux:s, ua:s, ba:s, products with +)")
      ->capture_default_str();
  cmd->add_option("--n-solve", opt.n_solve, "Solver sample count")->capture_default_str();
  cmd->add_option("--n-eval", opt.n_eval, "Evaluation sample count")->capture_default_str();
  cmd->add_option("--svd-threshold", opt.svd_threshold,
                  "Singular value cutoff for the truncated pseudo-inverse")
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Master seed (env GEF_SEED supplies the default)")
      ->capture_default_str();
}

GcnModel load_model(const std::string& path) { return load_checkpoint(path).model; }

int run(int argc, char** argv) {
  CLI::App app{"Faithful GNN explanations: training, attribution, and evaluation"};
  app.require_subcommand(1);

  // gen-bashapes
  auto* gen_ba = app.add_subcommand("gen-bashapes", "Generate a BA-Shapes benchmark graph");
  BaShapesConfig ba_cfg;
  std::string ba_out, ba_labels_out;
  gen_ba->add_option("--out", ba_out, "Output graph JSON")->required();
  gen_ba->add_option("--edge-labels-out", ba_labels_out,
                     "Optional motif edge labels, stored as a graph JSON whose adjacency "
                     "is the 0/1 label matrix");
  gen_ba->add_option("--base-nodes", ba_cfg.base_nodes)->capture_default_str();
  gen_ba->add_option("--attachment", ba_cfg.attachment)->capture_default_str();
  gen_ba->add_option("--motifs", ba_cfg.n_motifs)->capture_default_str();
  gen_ba->add_option("--random-edge-fraction", ba_cfg.random_edge_fraction)
      ->capture_default_str();
  gen_ba->add_option("--feature-dim", ba_cfg.feature_dim)->capture_default_str();
  std::uint64_t ba_seed = default_seed();
  gen_ba->add_option("--seed", ba_seed)->capture_default_str();

  // gen-sensor
  auto* gen_sensor = app.add_subcommand("gen-sensor", "Generate a synthetic sensor series");
  std::string sensor_out;
  int sensor_s = 12, sensor_t = 600, sensor_attacks = 4, sensor_attack_len = 12;
  std::uint64_t sensor_seed = default_seed();
  gen_sensor->add_option("--out", sensor_out, "Output series JSON")->required();
  gen_sensor->add_option("--sensors", sensor_s)->capture_default_str();
  gen_sensor->add_option("--steps", sensor_t)->capture_default_str();
  gen_sensor->add_option("--attacks", sensor_attacks, "Number of injected attack segments")
      ->capture_default_str();
  gen_sensor->add_option("--attack-len", sensor_attack_len)->capture_default_str();
  gen_sensor->add_option("--seed", sensor_seed)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a GCN on a graph JSON file");
  std::string train_graph, train_out, train_cks_out, train_preset = "citation",
              train_optimizer = "adam";
  int train_hidden = 16;
  TrainConfig train_cfg;
  train_cmd->add_option("--graph", train_graph)->required();
  train_cmd->add_option("--out", train_out, "Trained model JSON")->required();
  train_cmd->add_option("--checkpoints-out", train_cks_out, "Checkpoint list JSON");
  train_cmd->add_option("--preset", train_preset, "citation | ba-shapes")
      ->check(CLI::IsMember({"citation", "ba-shapes"}))
      ->capture_default_str();
  train_cmd->add_option("--hidden", train_hidden)->capture_default_str();
  train_cmd->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_cfg.lr)->capture_default_str();
  train_cmd->add_option("--weight-decay", train_cfg.weight_decay)->capture_default_str();
  train_cmd->add_option("--optimizer", train_optimizer, "adam | sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train_cfg.checkpoint_every)
      ->capture_default_str();
  train_cfg.seed = default_seed();
  train_cmd->add_option("--seed", train_cfg.seed)->capture_default_str();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Attribute one node's prediction");
  CommonExplain ex_opt;
  add_explain_flags(explain_cmd, ex_opt);
  std::string ex_method = "kec", ex_out, ex_dot;
  int ex_node = 0;
  explain_cmd->add_option("--method", ex_method,
                          "sm | ig-zero | ig-random | linear | kec | gnnexpl-soft | gnnexpl")
      ->capture_default_str();
  explain_cmd->add_option("--node", ex_node)->required();
  explain_cmd->add_option("--out", ex_out, "Attribution JSON");
  explain_cmd->add_option("--export-dot", ex_dot, "Graphviz DOT of the edge scores");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Faithfulness protocol over a node slice");
  CommonExplain ev_opt;
  add_explain_flags(eval_cmd, ev_opt);
  std::string ev_methods = "sm,kec", ev_nodes = "0:10:1", ev_out;
  int ev_jobs = 1;
  eval_cmd->add_option("--methods", ev_methods, "Comma-separated method list")
      ->capture_default_str();
  eval_cmd->add_option("--nodes", ev_nodes, "Node slice start:stop:step")
      ->capture_default_str();
  eval_cmd->add_option("--jobs", ev_jobs, "Worker threads; output identical for any N")
      ->capture_default_str();
  eval_cmd->add_option("--out", ev_out, "Result JSON");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Checkpoint (parameter-faithfulness) sweep");
  CommonExplain sw_opt;
  sw_opt.model_path = "-";
  sweep_cmd->add_option("--graph", sw_opt.graph_path)->required();
  std::string sw_cks, sw_methods = "sm", sw_nodes = "0:10:1", sw_edge_labels, sw_out;
  sweep_cmd->add_option("--checkpoints", sw_cks, "Checkpoint list JSON")->required();
  sweep_cmd->add_option("--methods", sw_methods)->capture_default_str();
  sweep_cmd->add_option("--nodes", sw_nodes)->capture_default_str();
  sweep_cmd->add_option("--dist", sw_opt.dist_spec)->capture_default_str();
  sweep_cmd->add_option("--n-solve", sw_opt.n_solve)->capture_default_str();
  sweep_cmd->add_option("--n-eval", sw_opt.n_eval)->capture_default_str();
  sweep_cmd->add_option("--seed", sw_opt.seed)->capture_default_str();
  sweep_cmd->add_option("--edge-labels", sw_edge_labels,
                        "Edge label matrix (graph JSON); enables ROC-AUC quality");
  sweep_cmd->add_option("--out", sw_out, "Sweep CSV");
  int sw_jobs = 1;
  sweep_cmd->add_option("--jobs", sw_jobs)->capture_default_str();

  // anomaly
  auto* anomaly_cmd = app.add_subcommand("anomaly", "Sensor forecasting anomaly pipeline");
  std::string an_series, an_flags_out, an_explain_out, an_method = "kec",
              an_dist = "ux:0.2";
  int an_train_end = 0, an_val_end = 0;
  ForecasterConfig an_fcfg;
  DetectorConfig an_dcfg;
  std::uint64_t an_seed = default_seed();
  anomaly_cmd->add_option("--series", an_series, "Sensor series JSON")->required();
  anomaly_cmd->add_option("--train-end", an_train_end, "End of the training prefix")
      ->required();
  anomaly_cmd->add_option("--val-end", an_val_end, "End of the validation segment")
      ->required();
  anomaly_cmd->add_option("--window", an_dcfg.window)->capture_default_str();
  anomaly_cmd->add_flag("--normalize", an_dcfg.normalize,
                        "Median/IQR per-node deviation normalization");
  anomaly_cmd->add_option("--epochs", an_fcfg.epochs)->capture_default_str();
  anomaly_cmd->add_option("--hidden", an_fcfg.hidden)->capture_default_str();
  anomaly_cmd->add_option("--seed", an_seed)->capture_default_str();
  anomaly_cmd->add_option("--flags-out", an_flags_out, "Flag report CSV");
  anomaly_cmd->add_option("--explain-method", an_method, "sm | kec | softmask")
      ->check(CLI::IsMember({"sm", "kec", "softmask"}))
      ->capture_default_str();
  anomaly_cmd->add_option("--explain-out", an_explain_out,
                          "Attribution JSON for the first flagged timestep");
  anomaly_cmd->add_option("--dist", an_dist, "Distribution for KEC attribution")
      ->capture_default_str();

  // export-dot
  auto* dot_cmd = app.add_subcommand("export-dot", "Render an attribution JSON as DOT");
  std::string dot_attr, dot_graph, dot_out;
  dot_cmd->add_option("--attribution", dot_attr)->required();
  dot_cmd->add_option("--graph", dot_graph)->required();
  dot_cmd->add_option("--out", dot_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen_ba->parsed()) {
    ba_cfg.seed = ba_seed;
    BaShapesData data = gen_bashapes(ba_cfg);
    save_graph(data.graph, ba_out);
    if (!ba_labels_out.empty()) {
      Graph labels;
      labels.x = Matrix::Zero(data.graph.num_nodes(), 1);
      labels.a = data.edge_labels;
      save_graph(labels, ba_labels_out);
    }
    std::cout << "wrote " << ba_out << " (" << data.graph.num_nodes() << " nodes)\n";
  } else if (gen_sensor->parsed()) {
    SensorSeries series = gen_sensor_data(sensor_seed, sensor_s, sensor_t);
    // Attacks in the final third, clear of the train/validation prefix.
    RandomStream rng(sensor_seed, 0x99);
    const int zone_start = 2 * sensor_t / 3;
    for (int k = 0; k < sensor_attacks; ++k) {
      const int span = (sensor_t - zone_start) / std::max(1, sensor_attacks);
      const int t0 = zone_start + k * span;
      if (t0 + sensor_attack_len >= sensor_t) break;
      const int node = static_cast<int>(rng.below(sensor_s));
      const AttackKind kind = k % 2 == 0 ? AttackKind::ConstantSpoof : AttackKind::ZeroClamp;
      inject_attack(series, kind, node, t0, sensor_attack_len);
    }
    save_sensor_series(series, sensor_out);
    std::cout << "wrote " << sensor_out << " (" << sensor_s << " sensors, " << sensor_t
              << " steps)\n";
  } else if (train_cmd->parsed()) {
    Graph g = load_graph(train_graph);
    if (!g.has_labels()) throw ContractError("train: graph has no labels");
    const int classes = 1 + *std::max_element(g.labels.begin(), g.labels.end());
    train_cfg.optimizer = train_optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
    RandomStream rng(train_cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Init));
    GcnModel model = train_preset == "citation"
                         ? GcnModel::citation_preset(g.num_features(), classes, train_hidden, rng)
                         : GcnModel::ba_shapes_preset(g.num_features(), classes, train_hidden, rng);
    TrainResult result = train(std::move(model), g, train_cfg);
    Checkpoint final_ck;
    final_ck.epoch = train_cfg.epochs;
    final_ck.test_accuracy = accuracy(result.model, g, g.test_mask);
    final_ck.model = result.model;
    save_checkpoint(final_ck, train_out);
    if (!train_cks_out.empty()) save_checkpoints(result.checkpoints, train_cks_out);
    std::cout << "test accuracy " << final_ck.test_accuracy
              << (result.diverged ? " (diverged; last good parameters kept)" : "") << '\n';
  } else if (explain_cmd->parsed()) {
    Graph g = load_graph(ex_opt.graph_path);
    GcnModel model = load_model(ex_opt.model_path);
    ExperimentSpec spec;
    spec.nodes = NodeSlice{ex_node, ex_node + 1, 1};
    spec.methods = {method_from_name(ex_method)};
    spec.dists = {PerturbationDistribution::parse(ex_opt.dist_spec)};
    spec.n_solve = ex_opt.n_solve;
    spec.n_eval = ex_opt.n_eval;
    spec.seed = ex_opt.seed;
    spec.svd.singular_value_threshold = ex_opt.svd_threshold;

    const int hops = model.num_conv_layers();
    KhopSubgraph sub = extract_khop(g, ex_node, hops);
    const int lv = sub.local_of(ex_node);
    QuantityOfInterest qoi{NodeSelector::one_hot(sub.graph.num_nodes(), lv),
                           predict_class(model, sub.graph, lv)};
    const std::uint64_t op_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(ex_node));
    Attribution attr;
    switch (spec.methods[0]) {
      case Method::Sm:
        attr = saliency(model, sub.graph, qoi);
        break;
      case Method::IgZero:
        attr = integrated_gradients(model, sub.graph, qoi, IgBaseline::Zero, 50, op_seed);
        break;
      case Method::IgRandom:
        attr = integrated_gradients(model, sub.graph, qoi, IgBaseline::Random, 50, op_seed);
        break;
      case Method::Linear:
        attr = linear_optimal(model, sub.graph, qoi, spec.dists[0], spec.n_solve, op_seed,
                              spec.svd);
        break;
      case Method::Kec: {
        KecModel kec =
            kec_solve(model, sub.graph, qoi, spec.dists[0], spec.n_solve, op_seed, spec.svd);
        attr = kec_attribute(kec, sub.graph);
        break;
      }
      case Method::GnnexplSoft:
      case Method::Gnnexpl: {
        SoftMaskConfig cfg;
        cfg.seed = op_seed;
        SoftMask mask = softmask_explain(model, sub.graph, lv, cfg);
        attr = softmask_attribution(mask, sub.graph);
        break;
      }
    }
    Attribution global = scatter_attribution(attr, sub, g.num_nodes(), g.num_features());
    if (!ex_out.empty()) save_attribution(global, ex_out);
    if (!ex_dot.empty()) save_dot(global, g, ex_dot);
    std::cout << "explained node " << ex_node << " with " << ex_method << " (class "
              << qoi.class_index << ")\n";
  } else if (eval_cmd->parsed()) {
    Graph g = load_graph(ev_opt.graph_path);
    GcnModel model = load_model(ev_opt.model_path);
    ExperimentSpec spec;
    spec.nodes = NodeSlice::parse(ev_nodes);
    spec.methods = parse_methods(ev_methods);
    spec.dists = {PerturbationDistribution::parse(ev_opt.dist_spec)};
    spec.n_solve = ev_opt.n_solve;
    spec.n_eval = ev_opt.n_eval;
    spec.seed = ev_opt.seed;
    spec.jobs = ev_jobs;
    spec.svd.singular_value_threshold = ev_opt.svd_threshold;
    ExperimentResult result = run_experiment(model, g, spec);
    std::cout << result.table();
    if (!ev_out.empty()) save_result(result, ev_out);
  } else if (sweep_cmd->parsed()) {
    Graph g = load_graph(sw_opt.graph_path);
    std::vector<Checkpoint> cks = load_checkpoints(sw_cks);
    ExperimentSpec spec;
    spec.nodes = NodeSlice::parse(sw_nodes);
    spec.methods = parse_methods(sw_methods);
    spec.dists = {PerturbationDistribution::parse(sw_opt.dist_spec)};
    spec.n_solve = sw_opt.n_solve;
    spec.n_eval = sw_opt.n_eval;
    spec.seed = sw_opt.seed;
    spec.jobs = sw_jobs;
    Matrix edge_labels;
    const Matrix* labels_ptr = nullptr;
    if (!sw_edge_labels.empty()) {
      edge_labels = load_graph(sw_edge_labels).a;
      labels_ptr = &edge_labels;
    }
    std::vector<SweepRow> sweep = checkpoint_sweep(cks, g, spec, labels_ptr);
    std::cout << sweep_csv(sweep);
    if (!sw_out.empty()) save_sweep_csv(sweep, sw_out);
  } else if (anomaly_cmd->parsed()) {
    SensorSeries series = load_sensor_series(an_series);
    an_fcfg.window = an_dcfg.window;
    an_fcfg.seed = an_seed;
    an_dcfg.train_end = an_train_end;
    an_dcfg.val_end = an_val_end;
    GcnModel model = train_forecaster(series, an_fcfg, an_train_end);
    DetectionResult result = detect(series, model, an_dcfg);
    std::cout << "threshold " << result.threshold << ", " << result.flags.size()
              << " flagged timesteps\n";
    if (!an_flags_out.empty()) {
      std::ofstream out(an_flags_out);
      if (!out) throw IoError("cannot open '" + an_flags_out + "' for writing");
      out << "t,node,deviation\n";
      for (const auto& f : result.flags) {
        out << f.t << ',' << f.node << ',' << f.deviation << '\n';
      }
    }
    if (!an_explain_out.empty()) {
      if (result.flags.empty()) throw ContractError("anomaly: nothing flagged to explain");
      const AnomalyMethod method = an_method == "sm"        ? AnomalyMethod::Sm
                                   : an_method == "softmask" ? AnomalyMethod::Softmask
                                                             : AnomalyMethod::Kec;
      Attribution attr =
          explain_anomaly(model, series, result, result.flags.front().t, method, an_dcfg,
                          PerturbationDistribution::parse(an_dist), 200, an_seed);
      save_attribution(attr, an_explain_out);
    }
  } else if (dot_cmd->parsed()) {
    Attribution attr = load_attribution(dot_attr);
    Graph g = load_graph(dot_graph);
    save_dot(attr, g, dot_out);
    std::cout << "wrote " << dot_out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gef::IoError& ex) {
    std::cerr << "io error: " << ex.what() << '\n';
    return 4;
  } catch (const gef::NumericalError& ex) {
    std::cerr << "numerical error: " << ex.what() << '\n';
    return 3;
  } catch (const gef::ContractError& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}
