#include "eaf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "eaf/config.hpp"
#include "eaf/csv.hpp"
#include "eaf/dataset.hpp"
#include "eaf/error.hpp"
#include "eaf/rbf.hpp"
#include "eaf/report.hpp"
#include "eaf/simulation.hpp"

namespace eaf::cli {

namespace fs = std::filesystem;

namespace {

// Input problems map to exit 2, output problems to exit 3.
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", path));
  return in;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content) || !(out.flush())) {
    throw IoFailure(fmt::format("cannot write '{}'", path.string()));
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoFailure(fmt::format("cannot create output directory '{}'", dir.string()));
  }
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::ostream* err = nullptr;
};

AppConfig load_config(const Common& common) {
  if (common.config.empty()) return default_config();
  auto in = open_input(common.config);
  auto cfg = parse_config(in);
  for (const auto& w : cfg.warnings) *common.err << "warning: " << w << '\n';
  return cfg;
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const Common& common,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                    const nlohmann::ordered_json& extra = {}) {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["argv"] = args;
  j["config"] = common.config.empty() ? nlohmann::ordered_json(nullptr)
                                      : nlohmann::ordered_json(common.config);
  j["inputs"] = inputs;
  j["out"] = common.out;
  j["seed"] = common.seed;
  j["outputs"] = outputs;
  if (!extra.is_null()) j["details"] = extra;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

int cmd_simulate(const Common& common, const std::string& script_path, double duration,
                 const std::vector<std::string>& args, std::ostream& out) {
  auto cfg = load_config(common);
  if (common.seed_given) cfg.sim.plant.seed = common.seed;
  EventScript script;
  if (!script_path.empty()) {
    auto in = open_input(script_path);
    script = parse_event_script(in);
  }
  const auto result = generate_dataset(cfg.sim, script, duration);

  const fs::path dir(common.out);
  ensure_dir(dir);
  std::ostringstream tel;
  write_telemetry_header(tel);
  for (const auto& s : result.telemetry) write_telemetry_row(tel, s);
  write_file(dir / "telemetry.csv", tel.str());
  std::ostringstream lab;
  write_labels_csv(lab, result.labels);
  write_file(dir / "labels.csv", lab.str());

  Common echoed = common;
  echoed.seed = cfg.sim.plant.seed;
  std::vector<std::string> inputs;
  if (!script_path.empty()) inputs.push_back(script_path);
  write_manifest(dir, "simulate", args, echoed, inputs, {"telemetry.csv", "labels.csv"},
                 {{"duration_s", duration}, {"rows", result.telemetry.size()},
                  {"events", script.events.size()}});
  out << fmt::format("simulate: {} rows, {} scripted events -> {}\n", result.telemetry.size(),
                     script.events.size(), dir.string());
  return kExitOk;
}

int cmd_train(const Common& common, const std::vector<std::string>& telemetry_paths,
              const std::vector<std::string>& label_paths, std::optional<std::size_t> rules,
              std::optional<std::size_t> epochs, const std::vector<std::string>& args,
              std::ostream& out) {
  const auto cfg = load_config(common);
  if (telemetry_paths.size() != label_paths.size() || telemetry_paths.empty()) {
    throw Error(ErrorKind::DimensionMismatch,
                "give one --labels file for every --telemetry file");
  }
  const auto& predictor = cfg.sim.engine.predictor;
  std::vector<TrainingSample> dataset;
  for (std::size_t i = 0; i < telemetry_paths.size(); ++i) {
    auto tin = open_input(telemetry_paths[i]);
    const auto telemetry = read_telemetry_csv(tin);
    auto lin = open_input(label_paths[i]);
    const auto labels = read_labels_csv(lin);
    auto part = make_training_samples(telemetry, labels, cfg.sim.engine.protection.i_set, predictor);
    dataset.insert(dataset.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "no training samples in the inputs");

  std::vector<std::vector<double>> rows;
  rows.reserve(dataset.size());
  for (const auto& s : dataset) rows.push_back(s.x);
  InitOptions init;
  init.n = predictor.lags;
  init.eta = cfg.train.eta;
  init.k = rules.value_or(cfg.train.rules);
  init.seeds = class_seeds(dataset, init.k, common.seed);
  init.data = rows;
  init.seed = common.seed;
  auto initial = init_network(init);
  widen_rules(initial, feature_spread(dataset));

  // Samples no initial rule covers cannot be trained on.
  std::vector<TrainingSample> covered;
  covered.reserve(dataset.size());
  for (auto& s : dataset) {
    try {
      (void)infer(initial, s.x);
      covered.push_back(std::move(s));
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NoRuleFires) throw;
    }
  }
  const std::size_t dropped = dataset.size() - covered.size();
  if (covered.empty()) throw Error(ErrorKind::EmptyDataset, "no sample is covered by the initial rules");

  const auto n_epochs = epochs.value_or(cfg.train.epochs);
  const auto result = train(initial, covered, n_epochs, common.seed);

  const fs::path dir(common.out);
  ensure_dir(dir);
  std::ostringstream model;
  save_network(model, result.net);
  write_file(dir / "model.rbf", model.str());
  std::ostringstream trace;
  trace << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    trace << (e + 1) << ',' << csv::num(result.loss_trace[e]) << '\n';
  }
  write_file(dir / "loss.csv", trace.str());

  std::vector<std::string> inputs = telemetry_paths;
  inputs.insert(inputs.end(), label_paths.begin(), label_paths.end());
  write_manifest(dir, "train", args, common, inputs, {"model.rbf", "loss.csv"},
                 {{"samples", covered.size()},
                  {"dropped_uncovered", dropped},
                  {"rules", init.k},
                  {"epochs", n_epochs},
                  {"initial_loss", mean_loss(initial, covered)},
                  {"final_loss", result.loss_trace.empty() ? mean_loss(initial, covered)
                                                           : result.loss_trace.back()}});
  out << fmt::format("train: {} samples ({} uncovered dropped), {} rules, {} epochs -> {}\n",
                     covered.size(), dropped, init.k, n_epochs, dir.string());
  return kExitOk;
}

int cmd_replay(const Common& common, const std::string& telemetry_path,
               const std::string& model_path, const std::vector<std::string>& args,
               std::ostream& out) {
  auto cfg = load_config(common);
  auto tin = open_input(telemetry_path);
  const auto telemetry = read_telemetry_csv(tin);
  if (!model_path.empty()) {
    auto min = open_input(model_path);
    cfg.sim.engine.model = load_network(min);
  }
  Engine engine(cfg.sim.engine);
  const auto result = run_replay(engine, telemetry, cfg.sim.regulator);

  const fs::path dir(common.out);
  ensure_dir(dir);
  std::ostringstream events;
  write_events_csv(events, result.events);
  write_file(dir / "events.csv", events.str());
  std::ostringstream curve;
  write_curve_csv(curve, result.curve);
  write_file(dir / "prediction.csv", curve.str());
  write_file(dir / "summary.json", summary_json(result.summary).dump(2) + "\n");

  std::vector<std::string> inputs{telemetry_path};
  if (!model_path.empty()) inputs.push_back(model_path);
  write_manifest(dir, "replay", args, common, inputs,
                 {"events.csv", "prediction.csv", "summary.json"});
  out << fmt::format("replay: {} ticks, {} events, {} alert clusters -> {}\n",
                     result.summary.ticks, result.events.size(), result.summary.alert_clusters,
                     dir.string());
  return kExitOk;
}

int cmd_report(const Common& common, const std::vector<std::string>& prediction_paths,
               const std::vector<std::string>& label_paths, std::optional<double> window,
               const std::vector<std::string>& args, std::ostream& out) {
  const auto cfg = load_config(common);
  if (prediction_paths.size() != label_paths.size() || prediction_paths.empty()) {
    throw Error(ErrorKind::DimensionMismatch,
                "give one --labels file for every --prediction file");
  }
  std::vector<ScoredRun> runs;
  for (std::size_t i = 0; i < prediction_paths.size(); ++i) {
    auto pin = open_input(prediction_paths[i]);
    auto lin = open_input(label_paths[i]);
    runs.push_back({read_curve_csv(pin), read_labels_csv(lin)});
  }
  const auto metrics = score(runs, window.value_or(cfg.report.window_s));

  const fs::path dir(common.out);
  ensure_dir(dir);
  write_file(dir / "metrics.json", metrics_json(metrics).dump(2) + "\n");
  std::ostringstream plot;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ostringstream one;
    write_plot_csv(one, runs[i]);
    std::istringstream lines(one.str());
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      if (header) {
        if (i == 0) plot << "run," << line << '\n';
        header = false;
        continue;
      }
      plot << i << ',' << line << '\n';
    }
  }
  write_file(dir / "plot.csv", plot.str());

  std::vector<std::string> inputs = prediction_paths;
  inputs.insert(inputs.end(), label_paths.begin(), label_paths.end());
  write_manifest(dir, "report", args, common, inputs, {"metrics.json", "plot.csv"});
  out << fmt::format("report: {}/{} collapses detected ({:.3f}), {} false alarms ({:.2f}/h)\n",
                     metrics.detected, metrics.events, metrics.detection_rate,
                     metrics.false_alarms, metrics.false_alarms_per_hour);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Electrode protection for an ultra-high-power arc furnace"};
  app.require_subcommand(1);

  Common common;
  common.err = &err;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "flat key-value config file");
    sub->add_option("--out", common.out, "output directory")->required();
    sub->add_option("--seed", common.seed, "random seed");
  };

  std::string script_path;
  double duration = 0.0;
  auto* sim = app.add_subcommand("simulate", "run the synthetic furnace and label the trace");
  add_common(sim);
  sim->add_option("--script", script_path, "event script: time kind magnitude duration [phase]");
  sim->add_option("--duration", duration, "simulated seconds")->required();

  std::vector<std::string> telemetry_paths;
  std::vector<std::string> label_paths;
  std::optional<std::size_t> rules;
  std::optional<std::size_t> epochs;
  auto* tr = app.add_subcommand("train", "fit the fuzzy-rule RBF predictor");
  add_common(tr);
  tr->add_option("--telemetry", telemetry_paths, "telemetry CSV (repeatable)")->required();
  tr->add_option("--labels", label_paths, "label CSV matching each telemetry file")->required();
  tr->add_option("--rules", rules, "rule count");
  tr->add_option("--epochs", epochs, "training epochs");

  std::string telemetry_path;
  std::string model_path;
  auto* rp = app.add_subcommand("replay", "run the protection engine over a telemetry stream");
  add_common(rp);
  rp->add_option("--telemetry", telemetry_path, "telemetry CSV")->required();
  rp->add_option("--model", model_path, "trained model file");

  std::vector<std::string> prediction_paths;
  std::vector<std::string> report_labels;
  std::optional<double> window;
  auto* rep = app.add_subcommand("report", "score prediction curves against labels");
  add_common(rep);
  rep->add_option("--prediction", prediction_paths, "prediction curve CSV (repeatable)")->required();
  rep->add_option("--labels", report_labels, "label CSV matching each curve")->required();
  rep->add_option("--window", window, "match window half-width in seconds");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  for (auto* sub : {sim, tr, rp, rep}) {
    if (sub->parsed()) common.seed_given = sub->count("--seed") > 0;
  }

  try {
    if (sim->parsed()) return cmd_simulate(common, script_path, duration, args, out);
    if (tr->parsed()) return cmd_train(common, telemetry_paths, label_paths, rules, epochs, args, out);
    if (rp->parsed()) return cmd_replay(common, telemetry_path, model_path, args, out);
    if (rep->parsed()) return cmd_report(common, prediction_paths, report_labels, window, args, out);
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace eaf::cli
