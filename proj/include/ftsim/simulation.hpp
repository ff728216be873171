#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftsim/dade.hpp"
#include "ftsim/datacenter.hpp"
#include "ftsim/fault_tolerance.hpp"
#include "ftsim/forecaster.hpp"
#include "ftsim/ha_metrics.hpp"
#include "ftsim/outage.hpp"
#include "ftsim/trace.hpp"
#include "ftsim/types.hpp"

namespace ftsim {

/// ft_erm: predict, cluster, Safe-Box reservations, proactive moves.
/// ft_erm_no_sbox: predict and move failure-prone VMs directly, no reservation.
/// no_ft_erm: no proactive action; overloads are repaired reactively only.
enum class Scenario { ft_erm, ft_erm_no_sbox, no_ft_erm };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct TraceSource {
  std::string file;  // empty -> synthetic
  TraceFormat format = TraceFormat::canonical_csv;
  SyntheticSpec synthetic;

  bool is_synthetic() const { return file.empty(); }
};

struct SimConfig {
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::ft_erm;
  int n_vms = 100;
  double vm_server_ratio = 2.0;  // VMs per server
  double user_fraction = 0.6;    // users as a share of VMs
  int max_vms_per_user = 10;
  int interval_seconds = 300;
  int horizon = 80;                   // simulated intervals
  int measurement_window_min = 100;   // report row granularity
  double t_thr_c = 26.0;
  double a_guaranteed = 0.9995;
  OfferedAvailabilityForm offered_form = OfferedAvailabilityForm::downtime_over_uptime;
  int retrain_every = 20;     // intervals between forecaster refits
  int history_window = 40;    // intervals of history used for fitting
  int training_row_cap = 512; // pooled window rows per refit (seeded subsample)
  int k_max = 10;
  int kmeans_restarts = 10;
  std::string fleet_file;     // empty -> stock fleet
  double link_mbps = 1000.0;
  TraceSource trace;
  NetworkLayout layout;
  DadeConfig dade;
  ResourceVector reference_capacity = default_reference_capacity();

  void validate() const;
};

SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);
SimConfig load_sim_config(const std::string& path);

struct JournalRow {
  int interval = 0;
  std::string vm_id;
  bool has_prediction = false;
  ResourceVector predicted = ResourceVector::Zero();  // capacity fraction
  bool failure_prone = false;                         // final, post server sweep
  bool insufficient_history = false;
  int server_id = -1;
  bool server_overloaded = false;
  bool server_thermal = false;
  int realized_next = -1;  // -1 unknown, 0 no contention at t+1, 1 contention
};

struct FtuRecord {
  int interval = 0;
  int cluster = 0;
  int member_count = 0;
  ResourceVector reserve = ResourceVector::Zero();  // capacity fraction
  int placements = 0;
  int placement_failures = 0;
  std::vector<std::string> members;
};

struct WindowReport {
  int index = 0;
  int vm_count = 0;
  double window_end_min = 0.0;
  double mttr_min = 0.0;
  double mtbf_min = 0.0;
  double availability = 0.0;
  double accuracy_pct = 0.0;
  bool accuracy_defined = false;
  long long predicted_failures = 0;
  long long migrations = 0;
  long long failure_episodes = 0;
};

struct ScenarioReport {
  SimConfig config;

  std::vector<double> power_w;          // one entry per interval
  std::vector<double> mean_temp_c;
  std::vector<double> max_temp_c;
  std::vector<double> utilization_pct;
  std::vector<int> active_servers;

  std::vector<MigrationEvent> migrations;
  std::vector<JournalRow> journal;
  std::vector<FtuRecord> ftu_records;
  std::vector<WindowReport> windows;
  std::vector<std::array<double, 5>> training_curve;  // generation,best_rmse,P1,P2,P3

  std::vector<Havn> havns;
  AvailabilityLedger ledger;  // datacenter-wide, per-episode failure count
  std::map<int, AvailabilityLedger> havn_ledgers;
  HaReport overall;                 // per-episode view
  HaReport pooled;                  // one episode per measurement window
  std::map<int, HaReport> havn_reports;

  double prediction_accuracy_pct = 0.0;
  bool accuracy_defined = false;
  long long predicted_failures = 0;
  long long placement_failures = 0;
  long long proactive_migrations = 0;
  long long reactive_migrations = 0;
  int type_downgrades = 0;
  double mean_power_w = 0.0;
  double worst_vmp_overshoot = 0.0;  // <= 0 means the placement constraint always held
};

ScenarioReport run_simulation(const SimConfig& config);

/// Share of journal rows whose classification matched the realized contention
/// one interval later, over rows with a known outcome. Throws when no row has
/// an outcome yet.
double compute_prediction_accuracy(const std::vector<JournalRow>& journal);

/// Writes summary.json and/or the CSV set (availability, power_temp_util,
/// migrations, training_curve, journal, clusters) into out_dir. Output bytes
/// are a pure function of the report.
void emit_reports(const ScenarioReport& report, const std::string& out_dir, bool write_csv,
                  bool write_json);

}  // namespace ftsim
