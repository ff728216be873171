#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "ftsim/simulation.hpp"

using namespace ftsim;

namespace {

SimConfig desk_config(Scenario scenario, std::uint64_t seed, SyntheticPattern pattern) {
  SimConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = seed;
  cfg.n_vms = 24;
  cfg.horizon = 30;
  cfg.layout.input_sets = 4;
  cfg.layout.hidden_sets = 3;
  cfg.layout.hidden_layers = 1;
  cfg.dade.population_size = 8;
  cfg.dade.max_generations = 12;
  cfg.retrain_every = 15;
  cfg.history_window = 12;
  cfg.training_row_cap = 96;
  cfg.trace.synthetic.pattern = pattern;
  cfg.trace.synthetic.burst_period = 8;
  cfg.trace.synthetic.burst_length = 3;
  return cfg;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("constant quiet trace: no failure-prone vms after warm-up, full availability") {
  SimConfig cfg = desk_config(Scenario::ft_erm, 5, SyntheticPattern::noisy_constant);
  cfg.trace.synthetic.base = 0.12;  // below every allocation fraction
  cfg.trace.synthetic.amplitude = 0.0;
  const ScenarioReport report = run_simulation(cfg);
  CHECK(report.migrations.empty());
  CHECK(report.predicted_failures == 0);
  CHECK(report.overall.availability == doctest::Approx(100.0));
  CHECK(report.worst_vmp_overshoot <= 1e-9);
  CHECK(report.accuracy_defined);
  CHECK(report.prediction_accuracy_pct == doctest::Approx(100.0));
}

TEST_CASE("series lengths equal the horizon") {
  const SimConfig cfg = desk_config(Scenario::ft_erm_no_sbox, 6, SyntheticPattern::sinusoid);
  const ScenarioReport report = run_simulation(cfg);
  CHECK(report.power_w.size() == static_cast<std::size_t>(cfg.horizon));
  CHECK(report.mean_temp_c.size() == static_cast<std::size_t>(cfg.horizon));
  CHECK(report.utilization_pct.size() == static_cast<std::size_t>(cfg.horizon));
  CHECK(report.active_servers.size() == static_cast<std::size_t>(cfg.horizon));
  CHECK(report.journal.size() == static_cast<std::size_t>(cfg.horizon * cfg.n_vms));
}

TEST_CASE("too short a trace fails up front") {
  SimConfig cfg = desk_config(Scenario::ft_erm, 7, SyntheticPattern::sinusoid);
  cfg.trace.file = "/nonexistent/trace.csv";
  CHECK_THROWS(run_simulation(cfg));
}

TEST_CASE("reruns with the same seed write byte-identical reports") {
  const SimConfig cfg = desk_config(Scenario::ft_erm, 11, SyntheticPattern::step_burst);
  const auto dir_a = std::filesystem::temp_directory_path() / "ftsim_det_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "ftsim_det_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  emit_reports(run_simulation(cfg), dir_a.string(), true, true);
  emit_reports(run_simulation(cfg), dir_b.string(), true, true);

  for (const char* name : {"summary.json", "availability.csv", "power_temp_util.csv",
                           "migrations.csv", "training_curve.csv", "journal.csv", "clusters.csv"}) {
    INFO(name);
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
}

TEST_CASE("emit honours the format selection") {
  const SimConfig cfg = desk_config(Scenario::no_ft_erm, 13, SyntheticPattern::noisy_constant);
  const ScenarioReport report = run_simulation(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "ftsim_json_only";
  std::filesystem::remove_all(dir);
  emit_reports(report, dir.string(), /*write_csv=*/false, /*write_json=*/true);
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "availability.csv"));
}

TEST_CASE("availability.csv carries one row per measurement window") {
  SimConfig cfg = desk_config(Scenario::ft_erm, 17, SyntheticPattern::step_burst);
  cfg.horizon = 40;  // 200 simulated minutes -> 2 windows of 100 min
  const ScenarioReport report = run_simulation(cfg);
  CHECK(report.windows.size() == 2);
  const auto dir = std::filesystem::temp_directory_path() / "ftsim_windows";
  std::filesystem::remove_all(dir);
  emit_reports(report, dir.string(), true, false);
  const std::string csv = slurp(dir / "availability.csv");
  const auto rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 3);  // header + 2 windows
}

TEST_CASE("burst traces exercise the proactive path and keep capacity safe") {
  const SimConfig cfg = desk_config(Scenario::ft_erm, 19, SyntheticPattern::step_burst);
  const ScenarioReport report = run_simulation(cfg);
  CHECK(report.predicted_failures > 0);
  CHECK(report.worst_vmp_overshoot <= 1e-9);

  // Safe-Box dominance: every cluster reserve covers every member prediction.
  std::map<std::pair<int, std::string>, ResourceVector> predictions;
  for (const JournalRow& row : report.journal)
    if (row.has_prediction) predictions[{row.interval, row.vm_id}] = row.predicted;
  for (const FtuRecord& record : report.ftu_records) {
    for (const std::string& vm : record.members) {
      const auto it = predictions.find({record.interval, vm});
      REQUIRE(it != predictions.end());
      CHECK((record.reserve >= it->second - 1e-9).all());
    }
  }
}

TEST_CASE("proactive scenarios migrate no more than the reactive-only baseline") {
  std::size_t ft_erm_migrations = 0;
  std::size_t baseline_migrations = 0;
  for (std::uint64_t seed : {23ull, 29ull}) {
    ft_erm_migrations +=
        run_simulation(desk_config(Scenario::ft_erm, seed, SyntheticPattern::step_burst))
            .migrations.size();
    baseline_migrations +=
        run_simulation(desk_config(Scenario::no_ft_erm, seed, SyntheticPattern::step_burst))
            .migrations.size();
  }
  CHECK(baseline_migrations >= 1);
  CHECK(ft_erm_migrations <= baseline_migrations);
}

TEST_CASE("prediction accuracy counting identities") {
  std::vector<JournalRow> journal;
  JournalRow row;
  row.vm_id = "a";

  SUBCASE("perfect classifier scores 100") {
    for (int i = 0; i < 10; ++i) {
      row.failure_prone = i % 3 == 0;
      row.realized_next = row.failure_prone ? 1 : 0;
      journal.push_back(row);
    }
    CHECK(compute_prediction_accuracy(journal) == doctest::Approx(100.0));
  }
  SUBCASE("always-normal classifier is vacuously right without bursts") {
    for (int i = 0; i < 10; ++i) {
      row.failure_prone = false;
      row.realized_next = 0;
      journal.push_back(row);
    }
    CHECK(compute_prediction_accuracy(journal) == doctest::Approx(100.0));
  }
  SUBCASE("always-normal classifier misses exactly the burst share") {
    for (int i = 0; i < 100; ++i) {
      row.failure_prone = false;
      row.realized_next = i < 10 ? 1 : 0;
      journal.push_back(row);
    }
    CHECK(compute_prediction_accuracy(journal) == doctest::Approx(90.0));
  }
  SUBCASE("no outcomes is an error") {
    row.realized_next = -1;
    journal.push_back(row);
    CHECK_THROWS_AS(compute_prediction_accuracy(journal), std::invalid_argument);
  }
}

TEST_CASE("config json round-trip preserves the scenario surface") {
  SimConfig cfg = desk_config(Scenario::ft_erm_no_sbox, 31, SyntheticPattern::ramp);
  cfg.t_thr_c = 25.5;
  cfg.a_guaranteed = 0.999;
  const SimConfig back = sim_config_from_json(sim_config_to_json(cfg));
  CHECK(back.scenario == cfg.scenario);
  CHECK(back.seed == cfg.seed);
  CHECK(back.n_vms == cfg.n_vms);
  CHECK(back.t_thr_c == doctest::Approx(cfg.t_thr_c));
  CHECK(back.a_guaranteed == doctest::Approx(cfg.a_guaranteed));
  CHECK(back.trace.synthetic.pattern == cfg.trace.synthetic.pattern);
  CHECK(back.layout.input_sets == cfg.layout.input_sets);
  CHECK(back.dade.population_size == cfg.dade.population_size);
}
