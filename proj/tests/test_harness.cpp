#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "enzchan/harness.hpp"

using namespace enzchan;

namespace {

// A config small enough for simulated experiments inside a unit test.
const char* kSmallSystem = "small_test_system.cfg";

void write_small_system() {
  std::ofstream out(kSmallSystem);
  out << "v_enz_um3 = 0.027\nn_emit = 200\nn_enzyme = 1000\nk1 = 2e-19\n"
         "k_minus1 = 1e4\nk2 = 1e6\nr0_nm = 90\nrob_nm = 20\nrA_nm = 0.5\n"
         "rE_nm = 2.5\nrEA_nm = 3\ndt_us = 0.5\nbit_interval_us = 30\n";
}

ExperimentSpec small_impulse(std::int64_t trials, std::int64_t offset = 0) {
  ExperimentSpec spec;
  spec.name = "unit";
  spec.system = kSmallSystem;
  spec.mode = ExperimentMode::ImpulseResponse;
  spec.trials = trials;
  spec.trial_offset = offset;
  spec.master_seed = 99;
  spec.t_start_us = 5.0;
  spec.t_end_us = 40.0;
  spec.t_step_us = 5.0;
  return spec;
}

bool tables_equal(const ResultTable& a, const ResultTable& b) {
  if (a.schema != b.schema || a.rows.size() != b.rows.size()) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r)
    for (std::size_t c = 0; c < a.schema.size(); ++c) {
      const double x = a.rows[r][c], y = b.rows[r][c];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("impulse response table carries the contract columns") {
  write_small_system();
  const ResultTable t = run_experiment(small_impulse(0));
  for (const char* col : {"t_us", "analytic_lb", "analytic_noenzyme", "sim_mean",
                          "sim_stderr"})
    CHECK_NOTHROW(t.column(col));
  CHECK(t.rows.size() == 8);
  CHECK(t.value(0, "t_us") == 5.0);
  // Analytic-only run still carries both curves.
  CHECK(t.value(3, "analytic_lb") > 0.0);
  CHECK(t.value(3, "analytic_lb") <= t.value(3, "analytic_noenzyme"));
  CHECK(std::isnan(t.value(0, "sim_mean")));
}

TEST_CASE("merging shards reproduces the single full run") {
  write_small_system();
  const ResultTable full = run_experiment(small_impulse(40));
  const ResultTable shard_a = run_experiment(small_impulse(25, 0));
  const ResultTable shard_b = run_experiment(small_impulse(15, 25));
  const ResultTable merged = summarize({shard_a, shard_b});
  CHECK(tables_equal(full, merged));
  CHECK(merged.metadata.at("trials") == "40");
  // Shard order must not matter.
  const ResultTable merged_rev = summarize({shard_b, shard_a});
  CHECK(tables_equal(full, merged_rev));
}

TEST_CASE("summarize rejects bad inputs") {
  write_small_system();
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
  const ResultTable a = run_experiment(small_impulse(5, 0));
  ExperimentSpec other = small_impulse(5, 5);
  other.mode = ExperimentMode::DecayInterval;
  const ResultTable b = run_experiment(other);
  CHECK_THROWS_AS(summarize({a, b}), std::invalid_argument);
  // Overlapping ranges are not a valid tiling.
  const ResultTable c = run_experiment(small_impulse(5, 3));
  CHECK_THROWS_AS(summarize({a, c}), std::invalid_argument);
}

TEST_CASE("experiments are reproducible from their metadata") {
  write_small_system();
  ExperimentSpec spec = small_impulse(12);
  spec.threads = 3;
  const ResultTable first = run_experiment(spec);
  const ResultTable again = run_experiment(spec_from_metadata(first.metadata));
  CHECK(tables_equal(first, again));
  CHECK(first.metadata.at("config_hash") == again.metadata.at("config_hash"));
}

TEST_CASE("results do not depend on the worker count") {
  write_small_system();
  ExperimentSpec spec = small_impulse(10);
  spec.threads = 1;
  const ResultTable serial = run_experiment(spec);
  spec.threads = 4;
  const ResultTable parallel = run_experiment(spec);
  CHECK(tables_equal(serial, parallel));
}

TEST_CASE("budget refusal names the estimate") {
  write_small_system();
  ExperimentSpec spec = small_impulse(1000000000);
  try {
    run_experiment(spec);
    FAIL("expected a budget refusal");
  } catch (const BudgetError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("particle-steps") != std::string::npos);
    CHECK(msg.find("reduce trials") != std::string::npos);
  }
}

TEST_CASE("decay interval table") {
  ExperimentSpec spec;
  spec.system = "system1";
  spec.mode = ExperimentMode::DecayInterval;
  spec.trials = 0;
  spec.alpha_min = 0.1;
  spec.alpha_max = 0.9;
  spec.alpha_step = 0.1;
  const ResultTable t = run_experiment(spec);
  CHECK(t.rows.size() == 9);
  const double grid_step_us = 1e-3 * 25.6230 /* t_max, us */;
  for (const auto& row : t.rows) {
    CHECK(row[t.column("t_bound_enz_us")] >=
          row[t.column("t_num_enz_us")] - grid_step_us);
    CHECK(row[t.column("t_num_enz_us")] < row[t.column("t_num_noenz_us")]);
  }
}

TEST_CASE("threshold sweep reports the analytic optimum on the grid") {
  write_small_system();
  ExperimentSpec spec;
  spec.system = "system1";
  spec.mode = ExperimentMode::ThresholdSweep;
  spec.trials = 0;
  spec.sequences = 120;
  spec.n_bits = 25;
  spec.thresholds = {1, 2, 3, 4};
  spec.t_b_us = {120.0};
  spec.master_seed = 5;
  const ResultTable t = run_experiment(spec);
  REQUIRE(t.rows.size() == 4);
  std::size_t best = 0;
  for (std::size_t r = 1; r < t.rows.size(); ++r)
    if (t.value(r, "expected_pe") < t.value(best, "expected_pe")) best = r;
  CHECK(t.value(best, "xi") == 1.0);  // system 1, T_B = 120 us, enzymes
}

TEST_CASE("known sequence mode evaluates all three isi depths") {
  write_small_system();
  ExperimentSpec spec;
  spec.system = kSmallSystem;
  spec.mode = ExperimentMode::KnownSequenceError;
  spec.trials = 30;
  spec.bits = "11011";
  spec.thresholds = {1};
  spec.master_seed = 3;
  const ResultTable t = run_experiment(spec);
  REQUIRE(t.rows.size() == 5);
  for (const auto& row : t.rows) {
    CHECK(row[t.column("pe_isi_none")] >= 0.0);
    CHECK(row[t.column("pe_isi_full")] <= 1.0);
    CHECK(row[t.column("n_trials")] == 30.0);
  }
  CHECK(t.value(0, "bit") == 1.0);
  CHECK(t.value(2, "bit") == 0.0);
  // First bit: all depths agree (no history).
  CHECK(t.value(0, "pe_isi_none") == doctest::Approx(t.value(0, "pe_isi_full")));
}

TEST_CASE("csv output carries metadata and rectangular rows") {
  write_small_system();
  const ResultTable t = run_experiment(small_impulse(4));
  std::ostringstream out;
  write_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  bool saw_seed = false, saw_hash = false;
  std::size_t header_cols = 0, data_rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      saw_seed = saw_seed || line.find("master_seed=99") != std::string::npos;
      saw_hash = saw_hash || line.find("config_hash=") != std::string::npos;
      continue;
    }
    std::size_t cols = 1;
    for (char ch : line) cols += ch == ',';
    if (header_cols == 0)
      header_cols = cols;
    else {
      CHECK(cols == header_cols);
      ++data_rows;
    }
  }
  CHECK(saw_seed);
  CHECK(saw_hash);
  CHECK(data_rows == t.rows.size());
}

TEST_CASE("per-trial dump matches the trial output contract") {
  write_small_system();
  ExperimentSpec spec = small_impulse(3);
  spec.per_trial_out = "unit_trials.csv";
  run_experiment(spec);
  std::ifstream in("unit_trials.csv");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "trial_id,t_us,n_obs_free_A,n_E,n_EA,n_A_alive,n_A_degraded");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3 * 8);  // trials x sample times
  std::remove("unit_trials.csv");
}

TEST_CASE("experiment validation") {
  ExperimentSpec spec;
  spec.system = "nonexistent_file.cfg";
  CHECK_THROWS_AS(run_experiment(spec), ConfigError);
  spec = ExperimentSpec{};
  spec.system = "system1";
  spec.n_bits = 0;
  CHECK_THROWS_AS(run_experiment(spec), ConfigError);
  spec = ExperimentSpec{};
  spec.mode = ExperimentMode::KnownSequenceError;
  spec.bits = "10x";
  spec.trials = 0;
  CHECK_THROWS_AS(run_experiment(spec), ConfigError);
}

TEST_CASE("mode and enum names round-trip") {
  for (ExperimentMode m :
       {ExperimentMode::ImpulseResponse, ExperimentMode::DecayInterval,
        ExperimentMode::FirstBitDetection, ExperimentMode::KnownSequenceError,
        ExperimentMode::ThresholdSweep})
    CHECK(mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(mode_from_string("bogus"), std::invalid_argument);
}
