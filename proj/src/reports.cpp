#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ftsim/simulation.hpp"

namespace ftsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fixed(double v, int precision = 6) {
  char buf[64];
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

json ha_report_json(const HaReport& r) {
  return json{{"mtbf_min", std::isinf(r.mtbf_min) ? -1.0 : r.mtbf_min},
              {"mtbf_infinite", std::isinf(r.mtbf_min)},
              {"mttr_min", r.mttr_min},
              {"availability_pct", r.availability},
              {"offered_availability", r.offered},
              {"guaranteed_availability", r.guaranteed},
              {"ha_score", r.score}};
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s;
  s.n_vms = j.value("n_vms", s.n_vms);
  s.n_intervals = j.value("n_intervals", s.n_intervals);
  if (j.contains("pattern")) s.pattern = synthetic_pattern_from_string(j.at("pattern").get<std::string>());
  s.seed = j.value("seed", s.seed);
  s.interval_seconds = j.value("interval_seconds", s.interval_seconds);
  s.base = j.value("base", s.base);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.period = j.value("period", s.period);
  s.noise = j.value("noise", s.noise);
  s.phase_step = j.value("phase_step", s.phase_step);
  s.burst_period = j.value("burst_period", s.burst_period);
  s.burst_length = j.value("burst_length", s.burst_length);
  s.burst_level = j.value("burst_level", s.burst_level);
  s.burst_vm_fraction = j.value("burst_vm_fraction", s.burst_vm_fraction);
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  return json{{"n_vms", s.n_vms},
              {"n_intervals", s.n_intervals},
              {"pattern", to_string(s.pattern)},
              {"seed", s.seed},
              {"interval_seconds", s.interval_seconds},
              {"base", s.base},
              {"amplitude", s.amplitude},
              {"period", s.period},
              {"noise", s.noise},
              {"phase_step", s.phase_step},
              {"burst_period", s.burst_period},
              {"burst_length", s.burst_length},
              {"burst_level", s.burst_level},
              {"burst_vm_fraction", s.burst_vm_fraction}};
}

}  // namespace

SimConfig sim_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SimConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("scenario")) cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  cfg.n_vms = j.value("n_vms", cfg.n_vms);
  cfg.vm_server_ratio = j.value("vm_server_ratio", cfg.vm_server_ratio);
  cfg.user_fraction = j.value("user_fraction", cfg.user_fraction);
  cfg.max_vms_per_user = j.value("max_vms_per_user", cfg.max_vms_per_user);
  cfg.interval_seconds = j.value("interval_seconds", cfg.interval_seconds);
  cfg.horizon = j.value("horizon_intervals", cfg.horizon);
  cfg.measurement_window_min = j.value("measurement_window_minutes", cfg.measurement_window_min);
  cfg.t_thr_c = j.value("t_thr_celsius", cfg.t_thr_c);
  cfg.a_guaranteed = j.value("a_guaranteed", cfg.a_guaranteed);
  if (j.value("offered_availability_form", std::string("downtime_over_uptime")) ==
      "downtime_over_total")
    cfg.offered_form = OfferedAvailabilityForm::downtime_over_total;
  cfg.retrain_every = j.value("retrain_every", cfg.retrain_every);
  cfg.history_window = j.value("history_window", cfg.history_window);
  cfg.training_row_cap = j.value("training_row_cap", cfg.training_row_cap);
  cfg.k_max = j.value("k_max", cfg.k_max);
  cfg.kmeans_restarts = j.value("kmeans_restarts", cfg.kmeans_restarts);
  cfg.fleet_file = j.value("fleet_file", cfg.fleet_file);
  cfg.link_mbps = j.value("link_mbps", cfg.link_mbps);

  if (j.contains("trace")) {
    const json& t = j.at("trace");
    if (t.contains("file")) {
      cfg.trace.file = t.at("file").get<std::string>();
      if (t.contains("format"))
        cfg.trace.format = trace_format_from_string(t.at("format").get<std::string>());
    } else if (t.contains("synthetic")) {
      cfg.trace.synthetic = synthetic_from_json(t.at("synthetic"));
    }
  }

  if (j.contains("forecaster")) {
    const json& f = j.at("forecaster");
    cfg.layout.input_sets = f.value("input_sets", cfg.layout.input_sets);
    cfg.layout.hidden_sets = f.value("hidden_sets", cfg.layout.hidden_sets);
    cfg.layout.hidden_layers = f.value("hidden_layers", cfg.layout.hidden_layers);
  }
  if (j.contains("dade")) {
    const json& d = j.at("dade");
    cfg.dade.population_size = d.value("population_size", cfg.dade.population_size);
    cfg.dade.max_generations = d.value("max_generations", cfg.dade.max_generations);
    cfg.dade.mutation_lo = d.value("mutation_lo", cfg.dade.mutation_lo);
    cfg.dade.mutation_hi = d.value("mutation_hi", cfg.dade.mutation_hi);
    cfg.dade.crossover_eta_lo = d.value("crossover_eta_lo", cfg.dade.crossover_eta_lo);
    cfg.dade.crossover_eta_hi = d.value("crossover_eta_hi", cfg.dade.crossover_eta_hi);
    cfg.dade.init_weight_lo = d.value("init_weight_lo", cfg.dade.init_weight_lo);
    cfg.dade.init_weight_hi = d.value("init_weight_hi", cfg.dade.init_weight_hi);
    cfg.dade.convergence_epsilon = d.value("convergence_epsilon", cfg.dade.convergence_epsilon);
    cfg.dade.convergence_patience = d.value("convergence_patience", cfg.dade.convergence_patience);
    cfg.dade.asymmetric_b_term = d.value("asymmetric_b_term", cfg.dade.asymmetric_b_term);
  }
  if (j.contains("reference_capacity")) {
    const auto v = j.at("reference_capacity").get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("reference_capacity needs 3 components");
    cfg.reference_capacity = ResourceVector(v[0], v[1], v[2]);
  }
  cfg.validate();
  return cfg;
}

std::string sim_config_to_json(const SimConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["scenario"] = to_string(cfg.scenario);
  j["n_vms"] = cfg.n_vms;
  j["vm_server_ratio"] = cfg.vm_server_ratio;
  j["user_fraction"] = cfg.user_fraction;
  j["max_vms_per_user"] = cfg.max_vms_per_user;
  j["interval_seconds"] = cfg.interval_seconds;
  j["horizon_intervals"] = cfg.horizon;
  j["measurement_window_minutes"] = cfg.measurement_window_min;
  j["t_thr_celsius"] = cfg.t_thr_c;
  j["a_guaranteed"] = cfg.a_guaranteed;
  j["offered_availability_form"] = cfg.offered_form == OfferedAvailabilityForm::downtime_over_uptime
                                       ? "downtime_over_uptime"
                                       : "downtime_over_total";
  j["retrain_every"] = cfg.retrain_every;
  j["history_window"] = cfg.history_window;
  j["training_row_cap"] = cfg.training_row_cap;
  j["k_max"] = cfg.k_max;
  j["kmeans_restarts"] = cfg.kmeans_restarts;
  if (!cfg.fleet_file.empty()) j["fleet_file"] = cfg.fleet_file;
  j["link_mbps"] = cfg.link_mbps;
  if (cfg.trace.is_synthetic())
    j["trace"] = ordered_json{{"synthetic", synthetic_to_json(cfg.trace.synthetic)}};
  else
    j["trace"] = ordered_json{{"file", cfg.trace.file}, {"format", to_string(cfg.trace.format)}};
  j["forecaster"] = ordered_json{{"input_sets", cfg.layout.input_sets},
                                 {"hidden_sets", cfg.layout.hidden_sets},
                                 {"hidden_layers", cfg.layout.hidden_layers}};
  j["dade"] = ordered_json{{"population_size", cfg.dade.population_size},
                           {"max_generations", cfg.dade.max_generations},
                           {"mutation_lo", cfg.dade.mutation_lo},
                           {"mutation_hi", cfg.dade.mutation_hi},
                           {"crossover_eta_lo", cfg.dade.crossover_eta_lo},
                           {"crossover_eta_hi", cfg.dade.crossover_eta_hi},
                           {"init_weight_lo", cfg.dade.init_weight_lo},
                           {"init_weight_hi", cfg.dade.init_weight_hi},
                           {"convergence_epsilon", cfg.dade.convergence_epsilon},
                           {"convergence_patience", cfg.dade.convergence_patience},
                           {"asymmetric_b_term", cfg.dade.asymmetric_b_term}};
  j["reference_capacity"] = {cfg.reference_capacity[0], cfg.reference_capacity[1],
                             cfg.reference_capacity[2]};
  return j.dump(2) + "\n";
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sim_config_from_json(text);
}

void emit_reports(const ScenarioReport& report, const std::string& out_dir, bool write_csv,
                  bool write_json) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "'");

  if (write_json) {
    ordered_json j;
    j["scenario"] = to_string(report.config.scenario);
    j["config"] = json::parse(sim_config_to_json(report.config));
    j["overall"] = ha_report_json(report.overall);
    j["pooled_per_window"] = ha_report_json(report.pooled);
    j["prediction_accuracy_pct"] =
        report.accuracy_defined ? json(report.prediction_accuracy_pct) : json(nullptr);
    j["predicted_failures"] = report.predicted_failures;
    j["migrations_total"] = static_cast<long long>(report.migrations.size());
    j["migrations_proactive"] = report.proactive_migrations;
    j["migrations_reactive"] = report.reactive_migrations;
    j["placement_failures"] = report.placement_failures;
    j["type_downgrades"] = report.type_downgrades;
    j["mean_power_w"] = report.mean_power_w;
    j["worst_capacity_overshoot"] = report.worst_vmp_overshoot;
    ordered_json havns = ordered_json::array();
    for (const auto& [id, ha] : report.havn_reports) {
      ordered_json h = ha_report_json(ha);
      h["havn_id"] = id;
      const auto& ledger = report.havn_ledgers.at(id);
      h["migrations"] = ledger.migrations;
      havns.push_back(std::move(h));
    }
    j["havns"] = std::move(havns);
    write_file(dir / "summary.json", j.dump(2) + "\n");
  }

  if (!write_csv) return;

  {
    std::string csv =
        "vm_count,window_min,mttr,mtbf,availability_pct,pred_accuracy,predicted_failures,migrations\n";
    for (const WindowReport& w : report.windows) {
      csv += std::to_string(w.vm_count) + "," + fixed(w.window_end_min, 0) + "," +
             fixed(w.mttr_min, 2) + "," + fixed(w.mtbf_min, 2) + "," + fixed(w.availability, 2) +
             "," + (w.accuracy_defined ? fixed(w.accuracy_pct, 2) : std::string("")) + "," +
             std::to_string(w.predicted_failures) + "," + std::to_string(w.migrations) + "\n";
    }
    write_file(dir / "availability.csv", csv);
  }
  {
    std::string csv = "interval,power_w,mean_temp_c,max_temp_c,utilization_pct,active_servers\n";
    for (std::size_t t = 0; t < report.power_w.size(); ++t) {
      csv += std::to_string(t) + "," + fixed(report.power_w[t], 3) + "," +
             fixed(report.mean_temp_c[t], 3) + "," + fixed(report.max_temp_c[t], 3) + "," +
             fixed(report.utilization_pct[t], 3) + "," + std::to_string(report.active_servers[t]) +
             "\n";
    }
    write_file(dir / "power_temp_util.csv", csv);
  }
  {
    std::string csv = "interval,vm_id,source,dest,reason,downtime_min\n";
    for (const MigrationEvent& e : report.migrations) {
      csv += std::to_string(e.interval) + "," + e.vm_id + "," + std::to_string(e.source) + "," +
             std::to_string(e.dest) + "," + e.reason + "," + fixed(e.downtime_min, 2) + "\n";
    }
    write_file(dir / "migrations.csv", csv);
  }
  {
    std::string csv = "generation,best_rmse,p1,p2,p3\n";
    for (const auto& row : report.training_curve) {
      csv += fixed(row[0], 0) + "," + fixed(row[1], 8) + "," + fixed(row[2], 6) + "," +
             fixed(row[3], 6) + "," + fixed(row[4], 6) + "\n";
    }
    write_file(dir / "training_curve.csv", csv);
  }
  {
    std::string csv = "interval,vm_id,predicted_cpu,predicted_mem,predicted_bw,class,server,risk_flags\n";
    for (const JournalRow& row : report.journal) {
      std::string cls = row.insufficient_history ? "no_history"
                        : row.failure_prone      ? "failure_prone"
                                                 : "normal";
      std::string flags;
      if (row.server_overloaded) flags += "overloaded";
      if (row.server_thermal) flags += flags.empty() ? "thermal" : ";thermal";
      if (flags.empty()) flags = "-";
      csv += std::to_string(row.interval) + "," + row.vm_id + ",";
      if (row.has_prediction)
        csv += fixed(row.predicted[0], 6) + "," + fixed(row.predicted[1], 6) + "," +
               fixed(row.predicted[2], 6);
      else
        csv += ",,";
      csv += "," + cls + "," + std::to_string(row.server_id) + "," + flags + "\n";
    }
    write_file(dir / "journal.csv", csv);
  }
  {
    std::string csv = "interval,cluster,member_count,reserve_cpu,reserve_mem,reserve_bw,placements\n";
    for (const FtuRecord& r : report.ftu_records) {
      csv += std::to_string(r.interval) + "," + std::to_string(r.cluster) + "," +
             std::to_string(r.member_count) + "," + fixed(r.reserve[0], 6) + "," +
             fixed(r.reserve[1], 6) + "," + fixed(r.reserve[2], 6) + "," +
             std::to_string(r.placements) + "\n";
    }
    write_file(dir / "clusters.csv", csv);
  }
}

}  // namespace ftsim
