#include "enzchan/harness.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace enzchan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) { return format_double(v); }

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<std::int64_t> split_ints(const std::string& s) {
  std::vector<std::int64_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoll(tok));
  return out;
}

LoadedConfig load_system(const std::string& system) {
  for (const std::string& name : preset_names())
    if (system == name) return make_preset(system);
  return load_config_file(system);
}

// Work queue over trial indices; results land in per-trial slots so the
// outcome does not depend on how trials are distributed over workers.
void parallel_trials(std::int64_t n, int threads,
                     const std::function<void(std::int64_t)>& fn) {
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
  if (workers <= 1) {
    for (std::int64_t t = 0; t < n; ++t) fn(t);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::int64_t t = next.fetch_add(1);
      if (t >= n) return;
      try {
        fn(t);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double mean_and_stderr(double sum, double sumsq, double n, double* stderr_out) {
  if (n <= 0) {
    *stderr_out = kNaN;
    return kNaN;
  }
  const double mean = sum / n;
  if (n < 2) {
    *stderr_out = kNaN;
    return mean;
  }
  const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
  *stderr_out = std::sqrt(var / n);
  return mean;
}

double proportion_stderr(double successes, double n) {
  if (n <= 0) return kNaN;
  const double p = successes / n;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
}

std::vector<std::uint8_t> parse_bit_pattern(const std::string& s) {
  std::vector<std::uint8_t> bits;
  for (char c : s) {
    if (c == '0')
      bits.push_back(0);
    else if (c == '1')
      bits.push_back(1);
    else
      throw ConfigError("bit pattern must contain only 0 and 1");
  }
  if (bits.empty()) throw ConfigError("bit pattern must be nonempty");
  return bits;
}

void check_budget(const ExperimentSpec& spec, const SystemConfig& cfg,
                  double steps_per_trial, double expected_ones) {
  if (spec.trials <= 0) return;
  const double enzymes = spec.enzymes ? static_cast<double>(cfg.n_enzyme) : 0.0;
  const double a_load = spec.enzymes
                            ? 2.0 * static_cast<double>(cfg.n_emit)
                            : 0.5 * static_cast<double>(cfg.n_emit) *
                                  std::max(1.0, expected_ones);
  const double per_trial = steps_per_trial * (enzymes + a_load);
  const double estimate = static_cast<double>(spec.trials) * per_trial;
  if (estimate > spec.budget_cap) {
    const double suggested = std::floor(spec.budget_cap / std::max(per_trial, 1.0));
    char buf[224];
    std::snprintf(buf, sizeof buf,
                  "budget: estimated %.3g particle-steps exceed the cap of %.3g; "
                  "reduce trials to about %.0f or raise the cap",
                  estimate, spec.budget_cap, suggested);
    throw BudgetError(buf);
  }
}

std::vector<double> impulse_schedule_us(const ExperimentSpec& spec) {
  if (!(spec.t_step_us > 0.0) || !(spec.t_start_us > 0.0) ||
      spec.t_end_us < spec.t_start_us)
    throw ConfigError("impulse schedule requires 0 < t_start <= t_end and t_step > 0");
  const auto n = static_cast<std::size_t>(
      std::floor((spec.t_end_us - spec.t_start_us) / spec.t_step_us + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = spec.t_start_us + static_cast<double>(i) * spec.t_step_us;
  return out;
}

void dump_trials(const std::string& path, const std::vector<ObservationSeries>& all,
                 std::int64_t offset) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open per-trial output file '" + path + "'");
  write_trial_csv_header(out);
  for (std::size_t t = 0; t < all.size(); ++t)
    write_trial_csv_rows(out, offset + static_cast<std::int64_t>(t), all[t]);
}

// ---------------------------------------------------------------------------
// Mode implementations. Each fills integer sufficient statistics; the
// derived mean/stderr columns are produced by finalize_table so that
// summarize() can recompute them after merging shards.

void finalize_table(ResultTable& table) {
  const ExperimentMode mode = mode_from_string(table.metadata.at("mode"));
  auto col = [&](const char* name) { return table.column(name); };
  switch (mode) {
    case ExperimentMode::ImpulseResponse: {
      const auto n_c = col("n_trials"), s_c = col("obs_sum"), q_c = col("obs_sumsq");
      const auto m_c = col("sim_mean"), e_c = col("sim_stderr");
      for (auto& row : table.rows)
        row[m_c] = mean_and_stderr(row[s_c], row[q_c], row[n_c], &row[e_c]);
      break;
    }
    case ExperimentMode::FirstBitDetection: {
      const auto n_c = col("n_trials"), s_c = col("detect_sum");
      const auto p_c = col("sim_detect"), e_c = col("sim_stderr");
      for (auto& row : table.rows) {
        row[p_c] = row[n_c] > 0 ? row[s_c] / row[n_c] : kNaN;
        row[e_c] = proportion_stderr(row[s_c], row[n_c]);
      }
      break;
    }
    case ExperimentMode::KnownSequenceError: {
      const auto n_c = col("n_trials"), s_c = col("err_sum");
      const auto p_c = col("sim_pe"), e_c = col("sim_stderr");
      for (auto& row : table.rows) {
        row[p_c] = row[n_c] > 0 ? row[s_c] / row[n_c] : kNaN;
        row[e_c] = proportion_stderr(row[s_c], row[n_c]);
      }
      break;
    }
    case ExperimentMode::ThresholdSweep: {
      const double n_bits = std::stod(table.metadata.at("n_bits"));
      const auto n_c = col("n_transmissions"), s_c = col("err_sum"), q_c = col("err_sumsq");
      const auto p_c = col("sim_pe"), e_c = col("sim_stderr"), c_c = col("sim_stderr_clustered");
      for (auto& row : table.rows) {
        const double n = row[n_c];
        if (n <= 0) {
          row[p_c] = row[e_c] = row[c_c] = kNaN;
          continue;
        }
        const double decisions = n * n_bits;
        row[p_c] = row[s_c] / decisions;
        row[e_c] = proportion_stderr(row[s_c], decisions);
        // Per-transmission error rates are correlated within a sequence;
        // the clustered form treats each transmission as one observation.
        double se;
        mean_and_stderr(row[s_c] / n_bits, row[q_c] / (n_bits * n_bits), n, &se);
        row[c_c] = se;
      }
      break;
    }
    case ExperimentMode::DecayInterval:
      break;
  }
}

void run_impulse(const ExperimentSpec& spec, const SystemConfig& cfg, ResultTable& table) {
  const SystemConfig sim_cfg = spec.enzymes ? cfg : without_enzymes(cfg);
  const ChannelModel lb = make_channel_model(cfg, true);
  const ChannelModel free_diff = make_channel_model(cfg, false);

  const std::vector<double> grid_us = impulse_schedule_us(spec);
  std::vector<double> schedule(grid_us.size());
  for (std::size_t i = 0; i < grid_us.size(); ++i) schedule[i] = grid_us[i] * 1e-6;

  table.schema = {"t_us",    "analytic_lb", "analytic_noenzyme", "n_trials",
                  "obs_sum", "obs_sumsq",   "sim_mean",          "sim_stderr"};
  for (double tu : grid_us) {
    const double t = tu * 1e-6;
    table.rows.push_back({tu, expected_observed(t, lb), expected_observed(t, free_diff),
                          static_cast<double>(spec.trials), 0.0, 0.0, kNaN, kNaN});
  }
  if (spec.trials <= 0) return;
  check_budget(spec, sim_cfg, schedule.back() / cfg.dt, 1.0);

  const BitSequence pulse{{1}, cfg.bit_interval};
  const std::size_t ns = schedule.size();
  std::vector<std::int64_t> slots(static_cast<std::size_t>(spec.trials) * ns);
  std::vector<ObservationSeries> dump(spec.per_trial_out.empty() ? 0 : spec.trials);
  parallel_trials(spec.trials, spec.threads, [&](std::int64_t t) {
    ObservationSeries s = run_trial(sim_cfg, pulse, schedule,
                                    derive_seed(spec.master_seed, spec.trial_offset + t, 0),
                                    spec.sim);
    for (std::size_t i = 0; i < ns; ++i)
      slots[static_cast<std::size_t>(t) * ns + i] = s.counts[i];
    if (!dump.empty()) dump[static_cast<std::size_t>(t)] = std::move(s);
  });
  for (std::int64_t t = 0; t < spec.trials; ++t)
    for (std::size_t i = 0; i < ns; ++i) {
      const double c = static_cast<double>(slots[static_cast<std::size_t>(t) * ns + i]);
      table.rows[i][4] += c;
      table.rows[i][5] += c * c;
    }
  dump_trials(spec.per_trial_out, dump, spec.trial_offset);
}

void run_decay(const ExperimentSpec& spec, const SystemConfig& cfg, ResultTable& table) {
  if (!(spec.alpha_min > 0.0) || !(spec.alpha_max < 1.0) || !(spec.alpha_step > 0.0) ||
      spec.alpha_max < spec.alpha_min)
    throw ConfigError("decay grid requires 0 < alpha_min <= alpha_max < 1 and a positive step");
  const ChannelModel enz = make_channel_model(cfg, true);
  const ChannelModel noenz = make_channel_model(cfg, false);
  table.schema = {"alpha", "t_num_enz_us", "t_bound_enz_us", "t_num_noenz_us",
                  "t_bound_noenz_us"};
  const auto n = static_cast<std::size_t>(
      std::floor((spec.alpha_max - spec.alpha_min) / spec.alpha_step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = spec.alpha_min + static_cast<double>(i) * spec.alpha_step;
    table.rows.push_back(
        {a, decay_time(enz, {a, DecayMethod::NumericScan}) * 1e6,
         decay_time(enz, {a, DecayMethod::ClosedFormBound}) * 1e6,
         decay_time(noenz, {a, DecayMethod::NumericScan}) * 1e6,
         decay_time(noenz, {a, DecayMethod::ClosedFormBound}) * 1e6});
  }
}

void run_detection(const ExperimentSpec& spec, const SystemConfig& cfg, ResultTable& table) {
  const SystemConfig sim_cfg = spec.enzymes ? cfg : without_enzymes(cfg);
  const ChannelModel model = make_channel_model(cfg, spec.enzymes);
  const double ts = sampling_time(model);
  const double p = observation_probability(ts, model).p_ob;
  const double mu = static_cast<double>(cfg.n_emit) * p;

  table.schema = {"xi",       "p_detect_binomial", "p_detect_poisson", "p_detect_gaussian",
                  "n_trials", "detect_sum",        "sim_detect",       "sim_stderr"};
  for (std::int64_t xi : spec.thresholds) {
    table.rows.push_back(
        {static_cast<double>(xi),
         count_tail({CountFamily::Binomial, cfg.n_emit, mu, p}, xi),
         count_tail({CountFamily::Poisson, 0, mu, p}, xi),
         count_tail({CountFamily::Gaussian, 0, mu, p}, xi),
         static_cast<double>(spec.trials), 0.0, kNaN, kNaN});
  }
  if (spec.trials <= 0) return;
  check_budget(spec, sim_cfg, ts / cfg.dt, 1.0);

  const BitSequence pulse{{1}, cfg.bit_interval};
  const std::vector<double> schedule = {ts};
  std::vector<std::int64_t> slots(static_cast<std::size_t>(spec.trials));
  std::vector<ObservationSeries> dump(spec.per_trial_out.empty() ? 0 : spec.trials);
  parallel_trials(spec.trials, spec.threads, [&](std::int64_t t) {
    ObservationSeries s = run_trial(sim_cfg, pulse, schedule,
                                    derive_seed(spec.master_seed, spec.trial_offset + t, 0),
                                    spec.sim);
    slots[static_cast<std::size_t>(t)] = s.counts[0];
    if (!dump.empty()) dump[static_cast<std::size_t>(t)] = std::move(s);
  });
  for (std::int64_t t = 0; t < spec.trials; ++t)
    for (std::size_t x = 0; x < spec.thresholds.size(); ++x)
      if (slots[static_cast<std::size_t>(t)] >= spec.thresholds[x]) table.rows[x][5] += 1.0;
  dump_trials(spec.per_trial_out, dump, spec.trial_offset);
}

void run_known_sequence(const ExperimentSpec& spec, const SystemConfig& cfg,
                        ResultTable& table) {
  const SystemConfig sim_cfg = spec.enzymes ? cfg : without_enzymes(cfg);
  const ChannelModel model = make_channel_model(cfg, spec.enzymes);
  BitSequence seq;
  seq.bits = parse_bit_pattern(spec.bits.empty() ? "1111100000" : spec.bits);
  seq.bit_interval = spec.t_b_us.empty() ? cfg.bit_interval : spec.t_b_us.front() * 1e-6;
  const std::int64_t xi = spec.thresholds.front();
  const std::size_t nb = seq.bits.size();
  const double ts = sampling_time(model);

  table.schema = {"j",        "bit",     "pe_isi_none", "pe_isi_prev", "pe_isi_full",
                  "n_trials", "err_sum", "sim_pe",      "sim_stderr"};
  for (std::size_t j = 1; j <= nb; ++j) {
    table.rows.push_back(
        {static_cast<double>(j), static_cast<double>(seq.bits[j - 1]),
         bit_error_prob(j, seq, model, xi, spec.family, IsiMode::None, SamplingTime::DtAligned),
         bit_error_prob(j, seq, model, xi, spec.family, IsiMode::PreviousOnly,
                        SamplingTime::DtAligned),
         bit_error_prob(j, seq, model, xi, spec.family, IsiMode::Full, SamplingTime::DtAligned),
         static_cast<double>(spec.trials), 0.0, kNaN, kNaN});
  }
  if (spec.trials <= 0) return;

  std::vector<double> schedule(nb);
  for (std::size_t j = 0; j < nb; ++j)
    schedule[j] = static_cast<double>(j) * seq.bit_interval + ts;
  double ones = 0;
  for (auto b : seq.bits) ones += b;
  check_budget(spec, sim_cfg, schedule.back() / cfg.dt, ones);

  std::vector<std::int64_t> slots(static_cast<std::size_t>(spec.trials) * nb);
  std::vector<ObservationSeries> dump(spec.per_trial_out.empty() ? 0 : spec.trials);
  parallel_trials(spec.trials, spec.threads, [&](std::int64_t t) {
    ObservationSeries s = run_trial(sim_cfg, seq, schedule,
                                    derive_seed(spec.master_seed, spec.trial_offset + t, 0),
                                    spec.sim);
    for (std::size_t j = 0; j < nb; ++j)
      slots[static_cast<std::size_t>(t) * nb + j] = s.counts[j];
    if (!dump.empty()) dump[static_cast<std::size_t>(t)] = std::move(s);
  });
  for (std::int64_t t = 0; t < spec.trials; ++t)
    for (std::size_t j = 0; j < nb; ++j) {
      const bool decided = slots[static_cast<std::size_t>(t) * nb + j] >= xi;
      if (decided != (seq.bits[j] != 0)) table.rows[j][6] += 1.0;
    }
  dump_trials(spec.per_trial_out, dump, spec.trial_offset);
}

void run_threshold_sweep(const ExperimentSpec& spec, const SystemConfig& cfg,
                         ResultTable& table) {
  const SystemConfig sim_cfg = spec.enzymes ? cfg : without_enzymes(cfg);
  const ChannelModel model = make_channel_model(cfg, spec.enzymes);
  const double ts = sampling_time(model);
  const std::size_t nb = static_cast<std::size_t>(spec.n_bits);
  std::vector<double> tbs_us =
      spec.t_b_us.empty() ? std::vector<double>{cfg.bit_interval * 1e6} : spec.t_b_us;

  table.schema = {"t_b_us", "xi",     "expected_pe",        "n_transmissions",
                  "err_sum", "err_sumsq", "sim_pe", "sim_stderr", "sim_stderr_clustered"};

  double total_steps = 0.0;
  for (double tb_us : tbs_us)
    total_steps += (static_cast<double>(nb - 1) * tb_us * 1e-6 + ts) / cfg.dt;
  check_budget(spec, sim_cfg, total_steps, static_cast<double>(nb) * cfg.p1);

  for (std::size_t tb_idx = 0; tb_idx < tbs_us.size(); ++tb_idx) {
    const double tb = tbs_us[tb_idx] * 1e-6;
    std::vector<double> expected(spec.thresholds.size());
    for (std::size_t x = 0; x < spec.thresholds.size(); ++x) {
      expected[x] = mean_error_prob(model, tb, spec.thresholds[x], spec.family, spec.isi,
                                    spec.n_bits, static_cast<int>(spec.sequences), cfg.p1,
                                    derive_seed(spec.master_seed, tb_idx, 2), spec.threads,
                                    SamplingTime::DtAligned)
                        .mean_error;
    }

    std::vector<std::int64_t> counts;
    std::vector<std::uint8_t> seq_bits;
    std::vector<ObservationSeries> dump(spec.per_trial_out.empty() ? 0 : spec.trials);
    if (spec.trials > 0) {
      counts.resize(static_cast<std::size_t>(spec.trials) * nb);
      seq_bits.resize(static_cast<std::size_t>(spec.trials) * nb);
      std::vector<double> schedule(nb);
      for (std::size_t j = 0; j < nb; ++j)
        schedule[j] = static_cast<double>(j) * tb + ts;
      parallel_trials(spec.trials, spec.threads, [&](std::int64_t t) {
        Xoshiro256pp seq_rng(derive_seed(spec.master_seed, spec.trial_offset + t, 1));
        BitSequence seq;
        seq.bit_interval = tb;
        seq.bits.resize(nb);
        for (auto& b : seq.bits) b = seq_rng.uniform() < cfg.p1 ? 1 : 0;
        ObservationSeries s =
            run_trial(sim_cfg, seq, schedule,
                      derive_seed(spec.master_seed, spec.trial_offset + t, 0), spec.sim);
        for (std::size_t j = 0; j < nb; ++j) {
          counts[static_cast<std::size_t>(t) * nb + j] = s.counts[j];
          seq_bits[static_cast<std::size_t>(t) * nb + j] = seq.bits[j];
        }
        if (!dump.empty()) dump[static_cast<std::size_t>(t)] = std::move(s);
      });
      if (!spec.per_trial_out.empty()) {
        std::string path = spec.per_trial_out;
        if (tbs_us.size() > 1) path += "." + std::to_string(tb_idx);
        dump_trials(path, dump, spec.trial_offset);
      }
    }

    for (std::size_t x = 0; x < spec.thresholds.size(); ++x) {
      const std::int64_t xi = spec.thresholds[x];
      double err_sum = 0.0, err_sumsq = 0.0;
      for (std::int64_t t = 0; t < spec.trials; ++t) {
        std::int64_t errs = 0;
        for (std::size_t j = 0; j < nb; ++j) {
          const std::size_t k = static_cast<std::size_t>(t) * nb + j;
          const bool decided = counts[k] >= xi;
          if (decided != (seq_bits[k] != 0)) ++errs;
        }
        err_sum += static_cast<double>(errs);
        err_sumsq += static_cast<double>(errs) * static_cast<double>(errs);
      }
      table.rows.push_back({tbs_us[tb_idx], static_cast<double>(xi), expected[x],
                            static_cast<double>(spec.trials), err_sum, err_sumsq, kNaN,
                            kNaN, kNaN});
    }
  }
}

std::vector<std::int64_t> default_thresholds(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::FirstBitDetection: return {1, 2, 3, 4, 5};
    case ExperimentMode::ThresholdSweep: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    case ExperimentMode::KnownSequenceError: return {1};
    default: return {};
  }
}

}  // namespace

std::size_t ResultTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i] == name) return i;
  throw std::invalid_argument("result table has no column '" + name + "'");
}

double ResultTable::value(std::size_t row, const std::string& name) const {
  return rows.at(row)[column(name)];
}

ResultTable run_experiment(const ExperimentSpec& raw) {
  ExperimentSpec spec = raw;
  if (spec.trials < 0 || spec.trial_offset < 0)
    throw ConfigError("trials and trial_offset must be nonnegative");
  if (spec.n_bits < 1) throw ConfigError("n_bits must be >= 1");
  if (spec.sequences < 1) throw ConfigError("sequences must be >= 1");
  if (spec.thresholds.empty()) spec.thresholds = default_thresholds(spec.mode);
  for (std::int64_t xi : spec.thresholds)
    if (xi < 0) throw ConfigError("thresholds must be nonnegative");

  const LoadedConfig loaded = load_system(spec.system);
  const SystemConfig& cfg = loaded.cfg;

  ResultTable table;
  table.metadata["name"] = spec.name;
  table.metadata["mode"] = to_string(spec.mode);
  table.metadata["system"] = spec.system;
  table.metadata["enzymes"] = spec.enzymes ? "1" : "0";
  table.metadata["master_seed"] = std::to_string(spec.master_seed);
  table.metadata["trials"] = std::to_string(spec.trials);
  table.metadata["trial_offset"] = std::to_string(spec.trial_offset);
  table.metadata["sequences"] = std::to_string(spec.sequences);
  table.metadata["n_bits"] = std::to_string(spec.n_bits);
  table.metadata["family"] = to_string(spec.family);
  table.metadata["isi"] = to_string(spec.isi);
  table.metadata["threads"] = std::to_string(spec.threads);
  table.metadata["thresholds"] = join_ints(spec.thresholds);
  table.metadata["t_b_us"] = join_doubles(spec.t_b_us);
  table.metadata["t_grid_us"] = join_doubles({spec.t_start_us, spec.t_end_us, spec.t_step_us});
  table.metadata["alpha_grid"] = join_doubles({spec.alpha_min, spec.alpha_max, spec.alpha_step});
  table.metadata["bits"] = spec.bits;
  table.metadata["budget_cap"] = fmt_double(spec.budget_cap);
  table.metadata["ea_diffuses_as_a"] = spec.sim.ea_diffuses_as_a ? "1" : "0";
  table.metadata["config_hash"] = fmt_double(0);  // replaced below
  {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, config_hash(cfg));
    table.metadata["config_hash"] = buf;
  }
  table.metadata["code_version"] = version_string();
  if (!loaded.warnings.empty()) {
    std::string all;
    for (const auto& w : loaded.warnings) {
      if (!all.empty()) all += "; ";
      all += w;
    }
    table.metadata["config_warnings"] = all;
  }

  switch (spec.mode) {
    case ExperimentMode::ImpulseResponse: run_impulse(spec, cfg, table); break;
    case ExperimentMode::DecayInterval: run_decay(spec, cfg, table); break;
    case ExperimentMode::FirstBitDetection: run_detection(spec, cfg, table); break;
    case ExperimentMode::KnownSequenceError: run_known_sequence(spec, cfg, table); break;
    case ExperimentMode::ThresholdSweep: run_threshold_sweep(spec, cfg, table); break;
  }
  finalize_table(table);
  return table;
}

namespace {

bool same_value(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

bool is_aggregate_column(const std::string& name) {
  if (name == "n_trials" || name == "n_transmissions") return true;
  const auto ends_with = [&](const char* suffix) {
    const std::size_t n = std::string(suffix).size();
    return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
  };
  return ends_with("_sum") || ends_with("_sumsq");
}

bool is_derived_column(const std::string& name) {
  return name == "sim_mean" || name == "sim_stderr" || name == "sim_detect" ||
         name == "sim_pe" || name == "sim_stderr_clustered";
}

}  // namespace

ResultTable summarize(const std::vector<ResultTable>& shards) {
  if (shards.empty()) throw std::invalid_argument("summarize: no tables given");

  // Order shards by their trial range; permutations of the input must not
  // matter.
  std::vector<const ResultTable*> ordered;
  ordered.reserve(shards.size());
  for (const auto& s : shards) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const ResultTable* a, const ResultTable* b) {
    return std::stoll(a->metadata.at("trial_offset")) <
           std::stoll(b->metadata.at("trial_offset"));
  });

  ResultTable merged = *ordered.front();
  std::int64_t total = std::stoll(merged.metadata.at("trials"));
  std::int64_t expected_offset = std::stoll(merged.metadata.at("trial_offset")) + total;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    const ResultTable& s = *ordered[i];
    if (s.schema != merged.schema) throw std::invalid_argument("summarize: schema mismatch");
    if (s.rows.size() != merged.rows.size())
      throw std::invalid_argument("summarize: row count mismatch");
    for (const auto& [key, val] : merged.metadata) {
      if (key == "trials" || key == "trial_offset" || key == "threads") continue;
      if (s.metadata.at(key) != val)
        throw std::invalid_argument("summarize: metadata mismatch on '" + key + "'");
    }
    if (std::stoll(s.metadata.at("trial_offset")) != expected_offset)
      throw std::invalid_argument("summarize: shard trial ranges are not contiguous");
    const std::int64_t s_trials = std::stoll(s.metadata.at("trials"));
    total += s_trials;
    expected_offset += s_trials;

    for (std::size_t r = 0; r < merged.rows.size(); ++r) {
      for (std::size_t c = 0; c < merged.schema.size(); ++c) {
        const std::string& name = merged.schema[c];
        if (is_aggregate_column(name)) {
          merged.rows[r][c] += s.rows[r][c];
        } else if (!is_derived_column(name) && !same_value(merged.rows[r][c], s.rows[r][c])) {
          throw std::invalid_argument("summarize: shards disagree on column '" + name + "'");
        }
      }
    }
  }
  merged.metadata["trials"] = std::to_string(total);
  merged.metadata["trial_offset"] =
      ordered.front()->metadata.at("trial_offset");
  finalize_table(merged);
  return merged;
}

void write_csv(std::ostream& out, const ResultTable& table) {
  for (const auto& [key, val] : table.metadata) out << "# " << key << "=" << val << "\n";
  for (std::size_t c = 0; c < table.schema.size(); ++c)
    out << (c ? "," : "") << table.schema[c];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

ExperimentSpec spec_from_metadata(const std::map<std::string, std::string>& m) {
  ExperimentSpec spec;
  spec.name = m.at("name");
  spec.mode = mode_from_string(m.at("mode"));
  spec.system = m.at("system");
  spec.enzymes = m.at("enzymes") == "1";
  spec.master_seed = std::stoull(m.at("master_seed"));
  spec.trials = std::stoll(m.at("trials"));
  spec.trial_offset = std::stoll(m.at("trial_offset"));
  spec.sequences = std::stoll(m.at("sequences"));
  spec.n_bits = static_cast<int>(std::stoll(m.at("n_bits")));
  spec.family = family_from_string(m.at("family"));
  spec.isi = isi_from_string(m.at("isi"));
  spec.threads = static_cast<int>(std::stoll(m.at("threads")));
  spec.thresholds = split_ints(m.at("thresholds"));
  spec.t_b_us = split_doubles(m.at("t_b_us"));
  const auto grid = split_doubles(m.at("t_grid_us"));
  spec.t_start_us = grid.at(0);
  spec.t_end_us = grid.at(1);
  spec.t_step_us = grid.at(2);
  const auto alpha = split_doubles(m.at("alpha_grid"));
  spec.alpha_min = alpha.at(0);
  spec.alpha_max = alpha.at(1);
  spec.alpha_step = alpha.at(2);
  spec.bits = m.at("bits");
  spec.budget_cap = std::stod(m.at("budget_cap"));
  spec.sim.ea_diffuses_as_a = m.at("ea_diffuses_as_a") == "1";
  return spec;
}

std::uint64_t config_hash(const SystemConfig& cfg) {
  const std::string text = dump_config(cfg);
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

const char* version_string() { return "0.1.0"; }

const char* to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::ImpulseResponse: return "impulse_response";
    case ExperimentMode::DecayInterval: return "decay_interval";
    case ExperimentMode::FirstBitDetection: return "first_bit_detection";
    case ExperimentMode::KnownSequenceError: return "known_sequence_error";
    case ExperimentMode::ThresholdSweep: return "threshold_sweep";
  }
  return "?";
}

const char* to_string(CountFamily family) {
  switch (family) {
    case CountFamily::Binomial: return "binomial";
    case CountFamily::Poisson: return "poisson";
    case CountFamily::Gaussian: return "gaussian";
  }
  return "?";
}

const char* to_string(IsiMode isi) {
  switch (isi) {
    case IsiMode::None: return "none";
    case IsiMode::PreviousOnly: return "prev";
    case IsiMode::Full: return "full";
  }
  return "?";
}

ExperimentMode mode_from_string(const std::string& s) {
  for (ExperimentMode m :
       {ExperimentMode::ImpulseResponse, ExperimentMode::DecayInterval,
        ExperimentMode::FirstBitDetection, ExperimentMode::KnownSequenceError,
        ExperimentMode::ThresholdSweep})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown experiment mode '" + s + "'");
}

CountFamily family_from_string(const std::string& s) {
  for (CountFamily f : {CountFamily::Binomial, CountFamily::Poisson, CountFamily::Gaussian})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown count family '" + s + "'");
}

IsiMode isi_from_string(const std::string& s) {
  for (IsiMode i : {IsiMode::None, IsiMode::PreviousOnly, IsiMode::Full})
    if (s == to_string(i)) return i;
  throw std::invalid_argument("unknown ISI mode '" + s + "'");
}

}  // namespace enzchan
