// Command-line front end: scenario simulation plus standalone forecaster
// training and prediction.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftsim/simulation.hpp"

namespace {

using ftsim::SimConfig;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::map<std::string, ftsim::VmSeries> load_series(const std::string& trace_path,
                                                   const std::string& format,
                                                   int interval_seconds) {
  const auto rows = ftsim::parse_trace(ftsim::trace_format_from_string(format),
                                       read_file(trace_path));
  return ftsim::aggregate_per_interval(rows, interval_seconds);
}

ftsim::WindowSet pooled_windows(const std::map<std::string, ftsim::VmSeries>& series_map,
                                int window_length, const std::string& only_vm) {
  std::vector<ftsim::Matrix> inputs;
  std::vector<ftsim::Matrix> targets;
  Eigen::Index rows = 0;
  for (const auto& [vm, series] : series_map) {
    if (!only_vm.empty() && vm != only_vm) continue;
    if (series.size() < static_cast<std::size_t>(window_length) + 1) continue;
    auto [normalized, record] = ftsim::normalize_minmax(series);
    (void)record;
    ftsim::WindowSet ws = ftsim::build_windows(normalized, window_length);
    rows += ws.rows();
    inputs.push_back(std::move(ws.inputs));
    targets.push_back(std::move(ws.targets));
  }
  if (rows == 0) throw std::runtime_error("trace yields no training windows");
  ftsim::WindowSet pooled;
  pooled.window_length = window_length;
  pooled.inputs.resize(rows, inputs.front().cols());
  pooled.targets.resize(rows, targets.front().cols());
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    pooled.inputs.middleRows(at, inputs[b].rows()) = inputs[b];
    pooled.targets.middleRows(at, inputs[b].rows()) = targets[b];
    at += inputs[b].rows();
  }
  return pooled;
}

int run_simulate(const std::string& config_path, const std::optional<std::string>& scenario,
                 const std::optional<std::uint64_t>& seed, const std::string& out_dir,
                 bool json_only) {
  SimConfig config = config_path.empty() ? SimConfig{} : ftsim::load_sim_config(config_path);
  if (scenario) config.scenario = ftsim::scenario_from_string(*scenario);
  if (seed) config.seed = *seed;
  config.validate();

  const ftsim::ScenarioReport report = ftsim::run_simulation(config);
  ftsim::emit_reports(report, out_dir, /*write_csv=*/!json_only, /*write_json=*/true);

  std::printf("scenario=%s seed=%llu migrations=%zu availability=%.4f%% accuracy=%s out=%s\n",
              ftsim::to_string(config.scenario), static_cast<unsigned long long>(config.seed),
              report.migrations.size(), report.overall.availability,
              report.accuracy_defined ? (std::to_string(report.prediction_accuracy_pct) + "%").c_str()
                                      : "n/a",
              out_dir.c_str());
  return 0;
}

int run_train(const std::string& trace_path, const std::string& format, const std::string& vm,
              int interval_seconds, const ftsim::NetworkLayout& layout, ftsim::DadeConfig dade,
              const std::string& genome_out, const std::string& curve_out) {
  const auto series_map = load_series(trace_path, format, interval_seconds);
  const ftsim::WindowSet windows = pooled_windows(series_map, layout.input_sets, vm);
  const ftsim::TrainReport report = ftsim::train(windows, layout, dade);

  ftsim::save_genome(report.best, genome_out);
  if (!curve_out.empty()) {
    std::ofstream out(curve_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + curve_out + "' for writing");
    out << "generation,best_rmse,p1,p2,p3\n";
    char buf[128];
    for (std::size_t g = 0; g < report.best_rmse_curve.size(); ++g) {
      std::snprintf(buf, sizeof buf, "%zu,%.8f,%.6f,%.6f,%.6f\n", g, report.best_rmse_curve[g],
                    report.probability_curve[g][0], report.probability_curve[g][1],
                    report.probability_curve[g][2]);
      out << buf;
    }
  }
  std::printf("trained %d generations, best rmse %.6f, genome -> %s\n", report.generations,
              report.best.fitness, genome_out.c_str());
  return 0;
}

int run_predict(const std::string& genome_path, const std::string& trace_path,
                const std::string& format, const std::string& vm, int interval_seconds) {
  const ftsim::NetworkGenome genome = ftsim::load_genome(genome_path);
  const auto series_map = load_series(trace_path, format, interval_seconds);

  std::printf("vm_id,predicted_cpu,predicted_mem,predicted_bw\n");
  for (const auto& [id, series] : series_map) {
    if (!vm.empty() && id != vm) continue;
    if (series.size() < static_cast<std::size_t>(genome.layout.input_sets)) continue;
    const ftsim::NormRecord record = ftsim::compute_norm_record(series);
    const ftsim::Prediction pred = ftsim::predict_next(genome, series, record);
    std::printf("%s,%.6f,%.6f,%.6f\n", id.c_str(), pred.denormalized[0], pred.denormalized[1],
                pred.denormalized[2]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven datacenter availability simulator"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run one scenario and emit reports");
  std::string config_path;
  std::string scenario_name;
  std::string out_dir = "out";
  std::uint64_t seed_value = 0;
  bool seed_set = false;
  bool json_only = false;
  simulate->add_option("--config", config_path, "JSON config file (defaults used when omitted)");
  simulate->add_option("--scenario", scenario_name, "ft_erm | ft_erm_no_sbox | no_ft_erm");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed_value, "override config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  simulate->add_flag("--json-only", json_only, "emit summary.json only");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit the forecaster on a trace");
  std::string trace_path, trace_format = "canonical_csv", vm_filter;
  std::string genome_out = "genome.json", curve_out;
  int interval_seconds = 300;
  ftsim::NetworkLayout layout;
  ftsim::DadeConfig dade;
  train_cmd->add_option("--trace", trace_path, "trace CSV file")->required();
  train_cmd->add_option("--format", trace_format, "canonical_csv | gcd_like | bitbrains_like");
  train_cmd->add_option("--vm", vm_filter, "train on one VM only (default: pool every VM)");
  train_cmd->add_option("--interval", interval_seconds, "aggregation interval, seconds");
  train_cmd->add_option("--window", layout.input_sets, "input window length");
  train_cmd->add_option("--hidden-sets", layout.hidden_sets, "hidden sets per layer");
  train_cmd->add_option("--hidden-layers", layout.hidden_layers, "hidden layer count");
  train_cmd->add_option("--population", dade.population_size, "population size");
  train_cmd->add_option("--generations", dade.max_generations, "generation budget");
  train_cmd->add_option("--seed", dade.seed, "training seed");
  train_cmd->add_option("--out", genome_out, "genome JSON output path");
  train_cmd->add_option("--curve", curve_out, "training-curve CSV output path");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "One-step prediction from a saved genome");
  std::string genome_path;
  std::string predict_trace, predict_format = "canonical_csv", predict_vm;
  int predict_interval = 300;
  predict_cmd->add_option("--genome", genome_path, "genome JSON file")->required();
  predict_cmd->add_option("--trace", predict_trace, "trace CSV file")->required();
  predict_cmd->add_option("--format", predict_format, "trace format");
  predict_cmd->add_option("--vm", predict_vm, "predict one VM only");
  predict_cmd->add_option("--interval", predict_interval, "aggregation interval, seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulate(config_path, scenario_name.empty() ? std::nullopt : std::optional(scenario_name),
                          seed_set ? std::optional(seed_value) : std::nullopt, out_dir, json_only);
    if (train_cmd->parsed())
      return run_train(trace_path, trace_format, vm_filter, interval_seconds, layout, dade,
                       genome_out, curve_out);
    if (predict_cmd->parsed())
      return run_predict(genome_path, predict_trace, predict_format, predict_vm, predict_interval);
  } catch (const std::exception& e) {
    const nlohmann::json err{{"error", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
