#include "ftsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace ftsim {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::ft_erm: return "ft_erm";
    case Scenario::ft_erm_no_sbox: return "ft_erm_no_sbox";
    case Scenario::no_ft_erm: return "no_ft_erm";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "ft_erm") return Scenario::ft_erm;
  if (s == "ft_erm_no_sbox") return Scenario::ft_erm_no_sbox;
  if (s == "no_ft_erm") return Scenario::no_ft_erm;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

void SimConfig::validate() const {
  if (n_vms < 1) throw std::invalid_argument("config: n_vms must be >= 1");
  if (vm_server_ratio <= 0.0) throw std::invalid_argument("config: vm_server_ratio must be positive");
  if (user_fraction <= 0.0 || user_fraction > 1.0)
    throw std::invalid_argument("config: user_fraction must lie in (0, 1]");
  if (max_vms_per_user < 1) throw std::invalid_argument("config: max_vms_per_user must be >= 1");
  if (interval_seconds < 1) throw std::invalid_argument("config: interval_seconds must be >= 1");
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (measurement_window_min <= 0)
    throw std::invalid_argument("config: measurement_window_min must be positive");
  if (retrain_every < 1) throw std::invalid_argument("config: retrain_every must be >= 1");
  if (history_window < layout.input_sets + 1)
    throw std::invalid_argument("config: history_window must cover at least input_sets + 1 intervals");
  if (training_row_cap < 1) throw std::invalid_argument("config: training_row_cap must be >= 1");
  if (k_max < 1 || kmeans_restarts < 1)
    throw std::invalid_argument("config: k_max and kmeans_restarts must be >= 1");
  if ((reference_capacity <= 0.0).any())
    throw std::invalid_argument("config: reference capacity must be positive");
  const int users = std::max(1, static_cast<int>(std::floor(n_vms * user_fraction)));
  if (static_cast<long long>(users) * max_vms_per_user < n_vms)
    throw std::invalid_argument("config: user pool cannot absorb every VM");
  layout.validate();
  dade.validate();
}

namespace {

constexpr int kStreamVmTypes = 10;
constexpr int kStreamUsers = 11;
constexpr int kStreamTrainingRows = 12;
constexpr int kStreamTraining = 13;
constexpr int kStreamElbow = 14;
constexpr int kStreamKmeans = 15;

double total_demand(const ResourceVector& v) { return v.sum(); }

/// Weighted instance-type draw, biased toward the smaller types.
VmType draw_vm_type(std::mt19937_64& rng) {
  static constexpr std::array<double, 4> cumulative{0.35, 0.65, 0.85, 1.0};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  for (std::size_t i = 0; i < cumulative.size(); ++i)
    if (u <= cumulative[i]) return static_cast<VmType>(i);
  return VmType::xlarge;
}

class SimEngine {
 public:
  explicit SimEngine(const SimConfig& config) : cfg_(config) { cfg_.validate(); }

  ScenarioReport run();

 private:
  void load_series();
  void build_datacenter();
  void initial_placement();
  void append_usage(int t);
  void reactive_repair(int t);
  void update_power_thermal(int t);
  void maybe_retrain(int t);
  void predict_and_dispatch(int t);
  void close_interval(int t);

  std::map<std::string, VmSeries> recent_history() const;

  SimConfig cfg_;
  ScenarioReport report_;

  int window_length_ = 0;  // forecaster input_sets
  double interval_min_ = 5.0;

  std::map<std::string, VmSeries> full_series_;  // trace-aligned, length >= l + horizon
  std::map<std::string, VmSeries> history_;      // grows one value per interval
  std::map<std::string, ResourceVector> fraction_now_;
  std::map<std::string, ResourceVector> demand_abs_now_;
  std::map<std::string, bool> contended_now_;

  Datacenter dc_;
  std::vector<Havn> havns_;
  std::map<std::string, int> havn_of_;
  NetworkGenome genome_;
  bool genome_ready_ = false;

  // Per-interval scratch, reset in close_interval.
  std::set<std::string> failed_vms_;
  long long interval_migrations_ = 0;
  long long interval_placement_failures_ = 0;

  // Journal rows per interval for outcome backfill.
  std::map<int, std::pair<std::size_t, std::size_t>> journal_span_;
};

void SimEngine::load_series() {
  std::vector<TraceRow> rows;
  if (cfg_.trace.is_synthetic()) {
    SyntheticSpec spec = cfg_.trace.synthetic;
    spec.n_vms = cfg_.n_vms;
    spec.interval_seconds = cfg_.interval_seconds;
    const int needed = cfg_.horizon + cfg_.layout.input_sets;
    if (spec.n_intervals < needed) spec.n_intervals = needed;
    spec.seed = mix_seed(cfg_.seed, 1);
    rows = generate_synthetic_trace(spec);
  } else {
    std::ifstream in(cfg_.trace.file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file '" + cfg_.trace.file + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    rows = parse_trace(cfg_.trace.format, text);
  }

  auto all = aggregate_per_interval(rows, cfg_.interval_seconds);
  const std::size_t needed = static_cast<std::size_t>(cfg_.horizon + window_length_);
  int taken = 0;
  for (auto& [vm, series] : all) {
    if (taken == cfg_.n_vms) break;
    if (series.size() < needed)
      throw std::runtime_error("trace for '" + vm + "' supplies " + std::to_string(series.size()) +
                               " intervals, need >= " + std::to_string(needed) +
                               " (horizon + window length)");
    full_series_.emplace(vm, std::move(series));
    ++taken;
  }
  if (taken < cfg_.n_vms)
    throw std::runtime_error("trace supplies " + std::to_string(taken) + " VMs, config needs " +
                             std::to_string(cfg_.n_vms));

  for (const auto& [vm, series] : full_series_) {
    VmSeries h;
    h.vm_id = vm;
    h.interval_seconds = cfg_.interval_seconds;
    h.values.assign(series.values.begin(),
                    series.values.begin() + static_cast<std::ptrdiff_t>(window_length_));
    history_.emplace(vm, std::move(h));
  }
}

void SimEngine::build_datacenter() {
  std::vector<ServerSpec> fleet =
      cfg_.fleet_file.empty()
          ? build_default_fleet(cfg_.n_vms, cfg_.vm_server_ratio, cfg_.link_mbps)
          : load_fleet_inventory(cfg_.fleet_file);

  std::mt19937_64 type_rng(mix_seed(cfg_.seed, kStreamVmTypes));
  std::mt19937_64 user_rng(mix_seed(cfg_.seed, kStreamUsers));

  const int users = std::max(1, static_cast<int>(std::floor(cfg_.n_vms * cfg_.user_fraction)));
  std::uniform_int_distribution<int> request(0, cfg_.max_vms_per_user);

  // Each user requests 0..max VMs; a top-up pass hands out the remainder.
  std::vector<int> quota(static_cast<std::size_t>(users), 0);
  int requested = 0;
  for (int u = 0; u < users; ++u) {
    quota[static_cast<std::size_t>(u)] = request(user_rng);
    requested += quota[static_cast<std::size_t>(u)];
  }
  while (requested < cfg_.n_vms) {
    for (int u = 0; u < users && requested < cfg_.n_vms; ++u) {
      if (quota[static_cast<std::size_t>(u)] < cfg_.max_vms_per_user) {
        ++quota[static_cast<std::size_t>(u)];
        ++requested;
      }
    }
  }

  std::vector<VmSpec> vms;
  vms.reserve(full_series_.size());
  int user_cursor = 0;
  int handed = 0;
  for (const auto& [vm_id, series] : full_series_) {
    (void)series;
    while (user_cursor < users - 1 && handed >= quota[static_cast<std::size_t>(user_cursor)]) {
      ++user_cursor;
      handed = 0;
    }
    VmSpec vm;
    vm.id = vm_id;
    vm.type = draw_vm_type(type_rng);
    vm.allocated = vm_type_allocation(vm.type);
    vm.storage_gb = vm_type_storage(vm.type);
    vm.owner_user = user_cursor;
    vm.havn_id = user_cursor;
    ++handed;
    vms.push_back(std::move(vm));
  }

  dc_ = Datacenter(std::move(fleet), std::move(vms));

  std::map<int, Havn> havn_map;
  for (const auto& [vm_id, vm] : dc_.vms()) {
    Havn& h = havn_map[vm.havn_id];
    h.id = vm.havn_id;
    h.user_id = vm.owner_user;
    h.vm_ids.push_back(vm_id);
    havn_of_[vm_id] = vm.havn_id;
  }
  for (auto& [id, havn] : havn_map) report_.havns.push_back(std::move(havn));
  havns_ = report_.havns;
}

void SimEngine::initial_placement() {
  for (const auto& [vm_id, vm] : dc_.vms()) {
    VmType type = vm.type;
    while (true) {
      const ResourceVector allocation = vm_type_allocation(type);
      const auto choice = select_energy_efficient_server(dc_.servers(), allocation);
      if (choice.has_value()) {
        if (type != vm.type) {
          auto& mutable_vm = const_cast<VmSpec&>(dc_.vm(vm_id));
          mutable_vm.type = type;
          mutable_vm.allocated = allocation;
          mutable_vm.storage_gb = vm_type_storage(type);
          ++report_.type_downgrades;
        }
        dc_.place(vm_id, *choice, allocation);
        break;
      }
      if (type == VmType::small)
        throw std::runtime_error("initial placement failed: no server admits '" + vm_id + "'");
      type = static_cast<VmType>(static_cast<int>(type) - 1);
    }
  }
}

void SimEngine::append_usage(int t) {
  fraction_now_.clear();
  demand_abs_now_.clear();
  contended_now_.clear();
  const auto index = static_cast<std::size_t>(window_length_ + t);
  for (auto& [vm_id, history] : history_) {
    const ResourceVector fraction = full_series_.at(vm_id).values.at(index);
    history.values.push_back(fraction);
    fraction_now_[vm_id] = fraction;
    demand_abs_now_[vm_id] = fraction * cfg_.reference_capacity;
    const ResourceVector allocation_fraction = dc_.vm(vm_id).allocated / cfg_.reference_capacity;
    contended_now_[vm_id] = exceeds_any(fraction, allocation_fraction);
  }

  // Backfill outcomes for the previous interval's classification.
  auto span = journal_span_.find(t - 1);
  if (span != journal_span_.end()) {
    for (std::size_t i = span->second.first; i < span->second.second; ++i) {
      JournalRow& row = report_.journal[i];
      row.realized_next = contended_now_.at(row.vm_id) ? 1 : 0;
    }
  }
}

void SimEngine::reactive_repair(int t) {
  const int n_servers = static_cast<int>(dc_.servers().size());
  for (int s = 0; s < n_servers; ++s) {
    while (true) {
      const ServerState& server = dc_.servers()[static_cast<std::size_t>(s)];
      ResourceVector realized = ResourceVector::Zero();
      for (const std::string& vm : server.hosted) realized += demand_abs_now_.at(vm);
      if (!exceeds_any(realized, server.spec.capacity, 1e-9)) break;

      // Overload: shed the heaviest consumers until the server fits again.
      // Destinations are picked by booked footprints alone; the baseline has
      // no demand foresight.
      std::vector<std::string> order(server.hosted.begin(), server.hosted.end());
      std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        const double da = total_demand(demand_abs_now_.at(a));
        const double db = total_demand(demand_abs_now_.at(b));
        if (da != db) return da > db;
        return a < b;
      });

      bool moved = false;
      for (const std::string& vm_id : order) {
        const auto dest = select_energy_efficient_server(dc_.servers(), dc_.vm(vm_id).allocated,
                                                         {}, vm_id, s);
        if (!dest.has_value()) continue;
        MigrationEvent event =
            dc_.apply_migration(vm_id, *dest, t, "reactive", dc_.vm(vm_id).allocated);
        report_.migrations.push_back(event);
        ++report_.reactive_migrations;
        ++interval_migrations_;
        failed_vms_.insert(vm_id);
        moved = true;
        break;
      }
      if (!moved) {
        // Nothing can leave; the overload stands as an unrepaired failure.
        for (const std::string& vm_id : server.hosted) failed_vms_.insert(vm_id);
        ++interval_placement_failures_;
        ++report_.placement_failures;
        break;
      }
    }
  }
}

void SimEngine::update_power_thermal(int t) {
  // Managed scenarios power empty servers off; the unmanaged baseline leaves
  // the whole fleet on, idling at the envelope floor.
  const bool fleet_always_on = cfg_.scenario == Scenario::no_ft_erm;

  double mean_temp = 0.0;
  double max_temp = 20.0;
  double total_power = 0.0;
  int active = 0;
  for (ServerState& server : dc_.servers()) {
    const bool powered = server.active() || fleet_always_on;
    if (server.active()) ++active;
    if (powered) {
      ResourceVector realized = ResourceVector::Zero();
      for (const std::string& vm : server.hosted) realized += demand_abs_now_.at(vm);
      server.cpu_util = std::min(1.0, realized[0] / server.spec.capacity[0]);
      server.power_w = server_power(server.spec, server.cpu_util);
      server.temperature_c = server_temperature(server.spec, server.power_w);
      total_power += server.power_w;
      mean_temp += server.temperature_c;
      max_temp = std::max(max_temp, server.temperature_c);
    } else {
      server.cpu_util = 0.0;
      server.power_w = 0.0;
      server.temperature_c = 20.0;
    }
    server.status = server_status(server.temperature_c, cfg_.t_thr_c);
  }

  const int powered_count =
      fleet_always_on ? static_cast<int>(dc_.servers().size()) : active;
  report_.power_w.push_back(total_power);
  report_.mean_temp_c.push_back(powered_count > 0 ? mean_temp / powered_count : 20.0);
  report_.max_temp_c.push_back(max_temp);
  const UtilizationReport util = datacenter_utilization(dc_.servers(), demand_abs_now_);
  report_.utilization_pct.push_back(util.overall_pct);
  report_.active_servers.push_back(active);
  (void)t;
}

std::map<std::string, VmSeries> SimEngine::recent_history() const {
  std::map<std::string, VmSeries> recent;
  const auto window = static_cast<std::size_t>(cfg_.history_window);
  for (const auto& [vm_id, history] : history_) {
    VmSeries slice;
    slice.vm_id = vm_id;
    slice.interval_seconds = history.interval_seconds;
    const std::size_t n = history.values.size();
    const std::size_t start = n > window ? n - window : 0;
    slice.values.assign(history.values.begin() + static_cast<std::ptrdiff_t>(start),
                        history.values.end());
    recent.emplace(vm_id, std::move(slice));
  }
  return recent;
}

void SimEngine::maybe_retrain(int t) {
  if (t % cfg_.retrain_every != 0 && genome_ready_) return;

  // Pool sliding windows from every VM's recent normalized history.
  const auto recent = recent_history();
  std::vector<Matrix> input_blocks;
  std::vector<Matrix> target_blocks;
  Eigen::Index total_rows = 0;
  for (const auto& [vm_id, slice] : recent) {
    if (slice.size() < static_cast<std::size_t>(window_length_) + 1) continue;
    auto [normalized, record] = normalize_minmax(slice);
    (void)record;
    WindowSet ws = build_windows(normalized, window_length_);
    total_rows += ws.rows();
    input_blocks.push_back(std::move(ws.inputs));
    target_blocks.push_back(std::move(ws.targets));
  }
  if (total_rows == 0) return;

  WindowSet pooled;
  pooled.window_length = window_length_;
  pooled.inputs.resize(total_rows, input_blocks.front().cols());
  pooled.targets.resize(total_rows, target_blocks.front().cols());
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < input_blocks.size(); ++b) {
    pooled.inputs.middleRows(at, input_blocks[b].rows()) = input_blocks[b];
    pooled.targets.middleRows(at, input_blocks[b].rows()) = target_blocks[b];
    at += input_blocks[b].rows();
  }

  if (pooled.rows() > cfg_.training_row_cap) {
    std::mt19937_64 rng(mix_seed(cfg_.seed, kStreamTrainingRows + 31ull * static_cast<std::uint64_t>(t)));
    std::vector<Eigen::Index> indices(static_cast<std::size_t>(pooled.rows()));
    std::iota(indices.begin(), indices.end(), 0);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(static_cast<std::size_t>(cfg_.training_row_cap));
    std::sort(indices.begin(), indices.end());
    WindowSet sampled;
    sampled.window_length = window_length_;
    sampled.inputs.resize(cfg_.training_row_cap, pooled.inputs.cols());
    sampled.targets.resize(cfg_.training_row_cap, pooled.targets.cols());
    for (Eigen::Index i = 0; i < sampled.inputs.rows(); ++i) {
      sampled.inputs.row(i) = pooled.inputs.row(indices[static_cast<std::size_t>(i)]);
      sampled.targets.row(i) = pooled.targets.row(indices[static_cast<std::size_t>(i)]);
    }
    pooled = std::move(sampled);
  }

  DadeConfig dade = cfg_.dade;
  dade.seed = mix_seed(cfg_.seed, kStreamTraining + 31ull * static_cast<std::uint64_t>(t));
  TrainReport trained = train(pooled, cfg_.layout, dade);
  genome_ = std::move(trained.best);
  genome_ready_ = true;

  for (std::size_t g = 0; g < trained.best_rmse_curve.size(); ++g) {
    report_.training_curve.push_back({static_cast<double>(g), trained.best_rmse_curve[g],
                                      trained.probability_curve[g][0],
                                      trained.probability_curve[g][1],
                                      trained.probability_curve[g][2]});
  }
}

void SimEngine::predict_and_dispatch(int t) {
  const auto recent = recent_history();
  IntervalAssessment assessment = run_interval(havns_, recent, genome_, dc_, demand_abs_now_,
                                               cfg_.reference_capacity, cfg_.t_thr_c, t);
  VmClassification& cls = assessment.classification;
  report_.predicted_failures += static_cast<long long>(cls.failure_prone.size());

  std::map<int, const ServerRisk*> risk_of;
  for (const ServerRisk& risk : assessment.risks) risk_of[risk.server_id] = &risk;

  const std::size_t journal_begin = report_.journal.size();
  for (const auto& [vm_id, vm] : dc_.vms()) {
    (void)vm;
    JournalRow row;
    row.interval = t;
    row.vm_id = vm_id;
    auto pred = cls.predictions.find(vm_id);
    if (pred != cls.predictions.end()) {
      row.has_prediction = true;
      row.predicted = pred->second.denormalized;
    }
    row.failure_prone = cls.failure_prone.count(vm_id) > 0;
    row.insufficient_history = cls.insufficient_history.count(vm_id) > 0;
    const int host = dc_.host_of(vm_id);
    row.server_id = dc_.servers()[static_cast<std::size_t>(host)].spec.id;
    auto risk = risk_of.find(row.server_id);
    if (risk != risk_of.end()) {
      row.server_overloaded = risk->second->overloaded;
      row.server_thermal = risk->second->thermal_unsafe;
    }
    report_.journal.push_back(std::move(row));
  }
  journal_span_[t] = {journal_begin, report_.journal.size()};

  if (cfg_.scenario == Scenario::no_ft_erm || cls.failure_prone.empty()) return;

  // Proactive destinations shy away from servers whose predicted load already
  // runs past their bookings; risk rows carry the predicted aggregates.
  std::vector<ResourceVector> predicted_overflow(dc_.servers().size(), ResourceVector::Zero());
  for (std::size_t i = 0; i < dc_.servers().size(); ++i) {
    auto risk = risk_of.find(dc_.servers()[i].spec.id);
    if (risk == risk_of.end()) continue;
    predicted_overflow[i] =
        (risk->second->aggregated_demand - dc_.servers()[i].committed()).max(0.0);
  }

  if (cfg_.scenario == Scenario::ft_erm) {
    std::vector<DemandPoint> points;
    points.reserve(cls.failure_prone.size());
    for (const std::string& vm_id : cls.failure_prone)  // std::set: sorted, deterministic
      points.push_back({vm_id, cls.predictions.at(vm_id).denormalized});

    const int k_upper = std::min<int>(cfg_.k_max, static_cast<int>(points.size()));
    const int k = choose_k_elbow(points, k_upper,
                                 mix_seed(cfg_.seed, kStreamElbow + 31ull * static_cast<std::uint64_t>(t)));
    const Clustering clustering =
        kmeans_best(points, k, mix_seed(cfg_.seed, kStreamKmeans + 31ull * static_cast<std::uint64_t>(t)),
                    cfg_.kmeans_restarts);

    std::vector<SafeBox> boxes;
    for (int c = 0; c < clustering.k; ++c) {
      std::vector<DemandPoint> members;
      for (const DemandPoint& p : points)
        if (clustering.assignments.at(p.vm_id) == c) members.push_back(p);
      if (members.empty()) continue;
      boxes.push_back(derive_safe_box(build_decision_matrix(members), c));
    }

    const auto plan = allocate_safe_boxes(clustering, boxes, points, dc_, cfg_.reference_capacity,
                                          predicted_overflow);
    DeploymentOutcome outcome = deploy_replicas(plan, dc_, t);

    for (const SafeBox& box : boxes) {
      FtuRecord record;
      record.interval = t;
      record.cluster = box.cluster;
      record.member_count = box.member_count;
      record.reserve = box.reserve;
      for (const SafeBoxPlacement& p : plan) {
        if (p.cluster != box.cluster) continue;
        record.members.push_back(p.vm_id);
        if (p.placed) ++record.placements;
      }
      record.placement_failures = record.member_count - record.placements;
      report_.ftu_records.push_back(std::move(record));
    }

    for (const MigrationEvent& event : outcome.migrations) {
      report_.migrations.push_back(event);
      ++report_.proactive_migrations;
      ++interval_migrations_;
      failed_vms_.insert(event.vm_id);
    }
    for (const std::string& vm_id : outcome.placement_failures) {
      failed_vms_.insert(vm_id);
      ++interval_placement_failures_;
      ++report_.placement_failures;
    }
    return;
  }

  // ft_erm_no_sbox: relocate each failure-prone VM by its allocation alone;
  // nothing is reserved beyond the booked footprint.
  std::vector<std::string> order(cls.failure_prone.begin(), cls.failure_prone.end());
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double da = total_demand(cls.predictions.at(a).denormalized);
    const double db = total_demand(cls.predictions.at(b).denormalized);
    if (da != db) return da > db;
    return a < b;
  });
  for (const std::string& vm_id : order) {
    const int source = dc_.host_of(vm_id);
    // Probe with the predicted demand so the destination will take the spike,
    // but book only the allocation: no reservation survives the move.
    const ResourceVector probe =
        dc_.vm(vm_id).allocated.max(cls.predictions.at(vm_id).denormalized *
                                    cfg_.reference_capacity);
    const auto dest =
        select_energy_efficient_server(dc_.servers(), probe, predicted_overflow, vm_id, source);
    if (!dest.has_value()) {
      failed_vms_.insert(vm_id);
      ++interval_placement_failures_;
      ++report_.placement_failures;
      continue;
    }
    MigrationEvent event =
        dc_.apply_migration(vm_id, *dest, t, "proactive_direct", dc_.vm(vm_id).allocated);
    report_.migrations.push_back(event);
    ++report_.proactive_migrations;
    ++interval_migrations_;
    failed_vms_.insert(vm_id);
  }
}

void SimEngine::close_interval(int t) {
  (void)t;
  const double uptime =
      static_cast<double>(cfg_.n_vms - static_cast<int>(failed_vms_.size())) * interval_min_;
  const double downtime = kMigrationDowntimeMin * static_cast<double>(interval_migrations_);

  report_.ledger.uptime_min += std::max(0.0, uptime);
  report_.ledger.downtime_min += downtime;
  report_.ledger.migrations += interval_migrations_;
  const bool episode = !failed_vms_.empty() || interval_migrations_ > 0;
  if (episode) ++report_.ledger.failures;

  std::map<int, long long> havn_migrations;
  std::map<int, std::set<std::string>> havn_failed;
  for (const std::string& vm_id : failed_vms_) havn_failed[havn_of_.at(vm_id)].insert(vm_id);
  for (std::size_t i = report_.migrations.size(); i-- > 0;) {
    const MigrationEvent& e = report_.migrations[i];
    if (e.interval != t) break;
    ++havn_migrations[havn_of_.at(e.vm_id)];
  }
  for (const Havn& havn : havns_) {
    AvailabilityLedger& ledger = report_.havn_ledgers[havn.id];
    const long long failed = havn_failed.count(havn.id)
                                 ? static_cast<long long>(havn_failed[havn.id].size())
                                 : 0;
    const long long moved = havn_migrations.count(havn.id) ? havn_migrations[havn.id] : 0;
    ledger.uptime_min +=
        std::max(0.0, (static_cast<double>(havn.vm_ids.size()) - static_cast<double>(failed)) *
                          interval_min_);
    ledger.downtime_min += kMigrationDowntimeMin * static_cast<double>(moved);
    ledger.migrations += moved;
    if (failed > 0 || moved > 0) ++ledger.failures;
  }

  report_.worst_vmp_overshoot = std::max(report_.worst_vmp_overshoot, dc_.worst_capacity_overshoot());

  failed_vms_.clear();
  interval_migrations_ = 0;
  interval_placement_failures_ = 0;
}

ScenarioReport SimEngine::run() {
  window_length_ = cfg_.layout.input_sets;
  interval_min_ = cfg_.interval_seconds / 60.0;
  report_.config = cfg_;

  load_series();
  build_datacenter();
  initial_placement();

  // Per-window accumulation.
  const int window_intervals =
      std::max(1, static_cast<int>(std::llround(cfg_.measurement_window_min / interval_min_)));
  std::vector<AvailabilityLedger> window_ledgers;
  std::vector<long long> window_predicted;
  std::vector<long long> window_match;
  std::vector<long long> window_total;

  AvailabilityLedger previous_snapshot;
  long long previous_predicted = 0;

  for (int t = 0; t < cfg_.horizon; ++t) {
    append_usage(t);
    // Power and temperature reflect the placement the interval started with:
    // repairs and proactive moves triggered at t take effect afterwards.
    update_power_thermal(t);
    reactive_repair(t);
    maybe_retrain(t);
    predict_and_dispatch(t);
    close_interval(t);

    const bool window_edge = (t + 1) % window_intervals == 0 || t + 1 == cfg_.horizon;
    if (window_edge) {
      AvailabilityLedger delta = report_.ledger;
      delta.uptime_min -= previous_snapshot.uptime_min;
      delta.downtime_min -= previous_snapshot.downtime_min;
      delta.failures -= previous_snapshot.failures;
      delta.migrations -= previous_snapshot.migrations;
      window_ledgers.push_back(delta);
      window_predicted.push_back(report_.predicted_failures - previous_predicted);
      previous_snapshot = report_.ledger;
      previous_predicted = report_.predicted_failures;
    }
  }

  // Outcome backfill done, accuracy per window and overall.
  window_match.assign(window_ledgers.size(), 0);
  window_total.assign(window_ledgers.size(), 0);
  long long match = 0;
  long long total = 0;
  for (const JournalRow& row : report_.journal) {
    if (row.realized_next < 0) continue;
    const bool hit = row.failure_prone == (row.realized_next == 1);
    const auto w = static_cast<std::size_t>(
        std::min<int>(row.interval / window_intervals, static_cast<int>(window_ledgers.size()) - 1));
    ++window_total[w];
    ++total;
    if (hit) {
      ++window_match[w];
      ++match;
    }
  }
  report_.accuracy_defined = total > 0;
  report_.prediction_accuracy_pct =
      total > 0 ? 100.0 * static_cast<double>(match) / static_cast<double>(total) : 0.0;

  for (std::size_t w = 0; w < window_ledgers.size(); ++w) {
    WindowReport window;
    window.index = static_cast<int>(w);
    window.vm_count = cfg_.n_vms;
    window.window_end_min = std::min<double>((static_cast<double>(w) + 1.0) *
                                                 static_cast<double>(window_intervals) * interval_min_,
                                             cfg_.horizon * interval_min_);
    window.mtbf_min = mtbf(window_ledgers[w]);
    window.mttr_min = mttr(window_ledgers[w]);
    window.availability = availability_pct(window.mtbf_min, window.mttr_min);
    window.accuracy_defined = window_total[w] > 0;
    window.accuracy_pct = window_total[w] > 0
                              ? 100.0 * static_cast<double>(window_match[w]) /
                                    static_cast<double>(window_total[w])
                              : 0.0;
    window.predicted_failures = window_predicted[w];
    window.migrations = window_ledgers[w].migrations;
    window.failure_episodes = window_ledgers[w].failures;
    report_.windows.push_back(window);
  }

  report_.overall = make_ha_report(report_.ledger, cfg_.a_guaranteed, cfg_.offered_form);
  AvailabilityLedger pooled = report_.ledger;
  long long pooled_nf = 0;
  for (const AvailabilityLedger& w : window_ledgers)
    if (w.failures > 0) ++pooled_nf;
  pooled.failures = pooled_nf;
  report_.pooled = make_ha_report(pooled, cfg_.a_guaranteed, cfg_.offered_form);

  for (const Havn& havn : havns_) {
    const AvailabilityLedger& ledger = report_.havn_ledgers[havn.id];
    report_.havn_reports[havn.id] = make_ha_report(ledger, cfg_.a_guaranteed, cfg_.offered_form);
  }

  report_.mean_power_w =
      report_.power_w.empty()
          ? 0.0
          : std::accumulate(report_.power_w.begin(), report_.power_w.end(), 0.0) /
                static_cast<double>(report_.power_w.size());
  return report_;
}

}  // namespace

ScenarioReport run_simulation(const SimConfig& config) { return SimEngine(config).run(); }

double compute_prediction_accuracy(const std::vector<JournalRow>& journal) {
  long long match = 0;
  long long total = 0;
  for (const JournalRow& row : journal) {
    if (row.realized_next < 0) continue;
    ++total;
    if (row.failure_prone == (row.realized_next == 1)) ++match;
  }
  if (total == 0)
    throw std::invalid_argument("prediction accuracy undefined: no classified interval has a realized outcome");
  return 100.0 * static_cast<double>(match) / static_cast<double>(total);
}

}  // namespace ftsim
