#pragma once
// Experiment orchestration: maps a declarative spec onto the analytic and
// simulation pipelines, fans trials out over a worker pool and reduces
// them into flat result tables. All aggregation runs over integer
// sufficient statistics, so results are bit-identical for any worker
// count and shard layout with a fixed master seed.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "enzchan/detect.hpp"
#include "enzchan/sim.hpp"

namespace enzchan {

enum class ExperimentMode {
  ImpulseResponse,    // expected/simulated counts over time after one impulse
  DecayInterval,      // time to decay to a fraction of the peak, vs alpha
  FirstBitDetection,  // detection probability of a single emission vs threshold
  KnownSequenceError, // per-bit error probability for a fixed pattern
  ThresholdSweep,     // expected/simulated mean error over (T_B, threshold)
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string system = "system1";  // preset name or config file path
  ExperimentMode mode = ExperimentMode::ImpulseResponse;
  std::int64_t trials = 1000;
  std::int64_t trial_offset = 0;  // first trial index; used for sharding
  std::int64_t sequences = 1000;  // analytic sequence draws (sweep)
  int n_bits = 50;
  std::vector<std::int64_t> thresholds;  // default per mode
  std::vector<double> t_b_us;            // bit intervals; default from config
  bool enzymes = true;
  std::uint64_t master_seed = 1;
  CountFamily family = CountFamily::Poisson;
  IsiMode isi = IsiMode::Full;
  int threads = 1;
  double t_start_us = 5.0, t_end_us = 200.0, t_step_us = 5.0;  // impulse grid
  double alpha_min = 0.05, alpha_max = 0.95, alpha_step = 0.05;
  std::string bits;  // known-sequence pattern; default 1111100000
  double budget_cap = 1e12;  // refuse runs above this many particle-steps
  SimOptions sim;
  std::string per_trial_out;  // optional per-trial observation CSV
};

struct ResultTable {
  std::vector<std::string> schema;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> metadata;

  std::size_t column(const std::string& name) const;
  double value(std::size_t row, const std::string& name) const;
};

// Runs the experiment. Throws ConfigError for unusable specs and
// BudgetError when the estimated particle-step count exceeds budget_cap.
ResultTable run_experiment(const ExperimentSpec& spec);

// Merges shards of the same experiment (differing only in trial ranges)
// into the table the single full run would have produced, bit for bit.
ResultTable summarize(const std::vector<ResultTable>& shards);

// '#'-prefixed metadata lines, a header row, then comma-separated data.
void write_csv(std::ostream& out, const ResultTable& table);

// Rebuilds the spec a table was produced from; re-running it reproduces
// the table exactly.
ExperimentSpec spec_from_metadata(const std::map<std::string, std::string>& metadata);

std::uint64_t config_hash(const SystemConfig& cfg);
const char* version_string();

const char* to_string(ExperimentMode mode);
const char* to_string(CountFamily family);
const char* to_string(IsiMode isi);
ExperimentMode mode_from_string(const std::string& s);
CountFamily family_from_string(const std::string& s);
IsiMode isi_from_string(const std::string& s);

}  // namespace enzchan
