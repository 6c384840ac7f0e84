// C bindings over the C++ core. Exceptions stop here: every entry point
// traps them, stores the message in a thread-local slot and returns a
// status code (or NULL).

#include "enzchan/enzchan.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "enzchan/channel.hpp"
#include "enzchan/detect.hpp"
#include "enzchan/harness.hpp"
#include "enzchan/physchem.hpp"
#include "enzchan/sim.hpp"

using namespace enzchan;

struct ec_config {
  LoadedConfig loaded;
};
struct ec_channel {
  ChannelModel model;
};
struct ec_sim {
  SimState state;
};
struct ec_table {
  ResultTable table;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_last_status = EC_OK;

void set_error(const std::string& msg, int status) {
  g_last_error = msg;
  g_last_status = status;
}

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int status_of(const std::exception& e) {
  if (dynamic_cast<const BudgetError*>(&e)) return EC_ERR_BUDGET;
  if (dynamic_cast<const ConfigError*>(&e)) return EC_ERR_CONFIG;
  if (dynamic_cast<const IoError*>(&e)) return EC_ERR_IO;
  if (dynamic_cast<const std::domain_error*>(&e)) return EC_ERR_DOMAIN;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return EC_ERR_DOMAIN;
  return EC_ERR;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_status = EC_OK;
    return EC_OK;
  } catch (const std::exception& e) {
    set_error(e.what(), status_of(e));
    return g_last_status;
  } catch (...) {
    set_error("unknown error", EC_ERR);
    return EC_ERR;
  }
}

template <class Fn>
auto guarded_ptr(Fn&& fn) -> decltype(fn()) {
  try {
    auto out = fn();
    g_last_status = EC_OK;
    return out;
  } catch (const std::exception& e) {
    set_error(e.what(), status_of(e));
    return nullptr;
  } catch (...) {
    set_error("unknown error", EC_ERR);
    return nullptr;
  }
}

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

CountFamily family_of(int family) {
  switch (family) {
    case EC_FAMILY_BINOMIAL: return CountFamily::Binomial;
    case EC_FAMILY_POISSON: return CountFamily::Poisson;
    case EC_FAMILY_GAUSSIAN: return CountFamily::Gaussian;
  }
  throw std::invalid_argument("invalid count family");
}

IsiMode isi_of(int isi) {
  switch (isi) {
    case EC_ISI_NONE: return IsiMode::None;
    case EC_ISI_PREV: return IsiMode::PreviousOnly;
    case EC_ISI_FULL: return IsiMode::Full;
  }
  throw std::invalid_argument("invalid ISI mode");
}

BitSequence sequence_of(const uint8_t* bits, int n_bits, double t_b) {
  if (!bits || n_bits < 1) throw std::invalid_argument("bit sequence must be nonempty");
  BitSequence seq;
  seq.bits.assign(bits, bits + n_bits);
  for (auto b : seq.bits)
    if (b > 1) throw std::invalid_argument("bits must be 0 or 1");
  seq.bit_interval = t_b;
  return seq;
}

SamplingTime sampling_of(int dt_aligned) {
  return dt_aligned ? SamplingTime::DtAligned : SamplingTime::Exact;
}

ExperimentSpec spec_of(const ec_experiment& e) {
  ExperimentSpec s;
  if (e.name) s.name = e.name;
  if (e.system) s.system = e.system;
  switch (e.mode) {
    case EC_MODE_IMPULSE_RESPONSE: s.mode = ExperimentMode::ImpulseResponse; break;
    case EC_MODE_DECAY_INTERVAL: s.mode = ExperimentMode::DecayInterval; break;
    case EC_MODE_FIRST_BIT_DETECTION: s.mode = ExperimentMode::FirstBitDetection; break;
    case EC_MODE_KNOWN_SEQUENCE_ERROR: s.mode = ExperimentMode::KnownSequenceError; break;
    case EC_MODE_THRESHOLD_SWEEP: s.mode = ExperimentMode::ThresholdSweep; break;
    default: throw ConfigError("invalid experiment mode");
  }
  s.trials = e.trials;
  s.trial_offset = e.trial_offset;
  s.sequences = e.sequences;
  s.n_bits = e.n_bits;
  if (e.thresholds && e.n_thresholds > 0)
    s.thresholds.assign(e.thresholds, e.thresholds + e.n_thresholds);
  if (e.t_b_us && e.n_t_b > 0) s.t_b_us.assign(e.t_b_us, e.t_b_us + e.n_t_b);
  s.enzymes = e.enzymes != 0;
  s.master_seed = e.master_seed;
  s.family = family_of(e.family);
  s.isi = isi_of(e.isi);
  s.threads = e.threads > 0 ? e.threads : 1;
  s.t_start_us = e.t_start_us;
  s.t_end_us = e.t_end_us;
  s.t_step_us = e.t_step_us;
  s.alpha_min = e.alpha_min;
  s.alpha_max = e.alpha_max;
  s.alpha_step = e.alpha_step;
  if (e.bits) s.bits = e.bits;
  s.budget_cap = e.budget_cap > 0 ? e.budget_cap : 1e12;
  s.sim.ea_diffuses_as_a = e.ea_diffuses_as_a != 0;
  if (e.per_trial_out) s.per_trial_out = e.per_trial_out;
  return s;
}

const std::pair<const std::string, std::string>* metadata_at(const ec_table* table,
                                                             int index) {
  if (!table || index < 0) return nullptr;
  int i = 0;
  for (const auto& kv : table->table.metadata) {
    if (i == index) return &kv;
    ++i;
  }
  return nullptr;
}

}  // namespace

extern "C" {

const char* ec_last_error(void) { return g_last_error.c_str(); }

int ec_last_status(void) { return g_last_status; }

const char* ec_version(void) { return version_string(); }

/* ------------------------------------------------------------------ */

int ec_preset_count(void) { return static_cast<int>(preset_names().size()); }

const char* ec_preset_name(int index) {
  const auto& names = preset_names();
  if (index < 0 || static_cast<std::size_t>(index) >= names.size()) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

ec_config* ec_config_preset(const char* name) {
  return guarded_ptr([&]() -> ec_config* {
    if (!name) throw ConfigError("preset name is null");
    return new ec_config{make_preset(name)};
  });
}

ec_config* ec_config_load(const char* path) {
  return guarded_ptr([&]() -> ec_config* {
    if (!path) throw ConfigError("config path is null");
    return new ec_config{load_config_file(path)};
  });
}

ec_config* ec_config_parse(const char* text) {
  return guarded_ptr([&]() -> ec_config* {
    if (!text) throw ConfigError("config text is null");
    return new ec_config{parse_config_text(text)};
  });
}

void ec_config_free(ec_config* cfg) { delete cfg; }

int ec_config_warning_count(const ec_config* cfg) {
  return cfg ? static_cast<int>(cfg->loaded.warnings.size()) : 0;
}

const char* ec_config_warning(const ec_config* cfg, int index) {
  if (!cfg || index < 0 ||
      static_cast<std::size_t>(index) >= cfg->loaded.warnings.size())
    return nullptr;
  return cfg->loaded.warnings[static_cast<std::size_t>(index)].c_str();
}

int ec_config_get(const ec_config* cfg, const char* key, double* out) {
  return guarded([&] {
    if (!cfg || !key || !out) throw std::invalid_argument("null argument");
    const SystemConfig& c = cfg->loaded.cfg;
    const std::string k = key;
    double v;
    if (k == "n_emit") v = static_cast<double>(c.n_emit);
    else if (k == "n_enzyme") v = static_cast<double>(c.n_enzyme);
    else if (k == "v_enz_side") v = c.v_enz_side;
    else if (k == "k1") v = c.k1;
    else if (k == "k_minus1") v = c.k_minus1;
    else if (k == "k2") v = c.k2;
    else if (k == "rx_distance") v = c.rx_distance;
    else if (k == "rx_radius") v = c.rx_radius;
    else if (k == "dt") v = c.dt;
    else if (k == "bit_interval") v = c.bit_interval;
    else if (k == "p1") v = c.p1;
    else if (k == "temperature") v = c.env.temperature;
    else if (k == "viscosity") v = c.env.viscosity;
    else if (k == "boltzmann") v = c.env.boltzmann;
    else if (k == "d_a") v = c.d_a();
    else if (k == "d_e") v = c.d_e();
    else if (k == "d_ea") v = c.d_ea();
    else if (k == "r_a") v = c.species_a.radius;
    else if (k == "r_e") v = c.species_e.radius;
    else if (k == "r_ea") v = c.species_ea.radius;
    else if (k == "v_ob") v = c.v_ob;
    else if (k == "c_etot") v = c.c_etot;
    else if (k == "r_rms") v = rms_separation(c);
    else if (k == "r_b") v = binding_radius(c).value;
    else if (k == "r_b_regime_ok") v = binding_radius(c).regime_ok ? 1.0 : 0.0;
    else throw std::invalid_argument("unknown config key '" + k + "'");
    *out = v;
  });
}

char* ec_config_dump(const ec_config* cfg) {
  return guarded_ptr([&]() -> char* {
    if (!cfg) throw std::invalid_argument("null config");
    return dup_string(dump_config(cfg->loaded.cfg));
  });
}

void ec_string_free(char* s) { delete[] s; }

/* ------------------------------------------------------------------ */

ec_channel* ec_channel_create(const ec_config* cfg, int enzymes_active) {
  return guarded_ptr([&]() -> ec_channel* {
    if (!cfg) throw std::invalid_argument("null config");
    return new ec_channel{make_channel_model(cfg->loaded.cfg, enzymes_active != 0)};
  });
}

void ec_channel_free(ec_channel* ch) { delete ch; }

double ec_channel_peak_time(const ec_channel* ch) { return ch ? ch->model.t_max : 0.0; }
double ec_channel_peak_count(const ec_channel* ch) { return ch ? ch->model.n_max : 0.0; }
double ec_channel_sampling_time(const ec_channel* ch) {
  return ch ? sampling_time(ch->model) : 0.0;
}
double ec_channel_c_etot(const ec_channel* ch) { return ch ? ch->model.c_etot : 0.0; }

int ec_channel_impulse_concentration(const ec_channel* ch, double r, double t, double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    *out = impulse_concentration(r, t, ch->model);
  });
}

int ec_channel_expected_observed(const ec_channel* ch, double t, double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    *out = expected_observed(t, ch->model);
  });
}

int ec_channel_observation_prob(const ec_channel* ch, double t, double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    *out = observation_probability(t, ch->model).p_ob;
  });
}

int ec_channel_decay_time(const ec_channel* ch, double alpha, int method, double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    const DecayMethod m = method == EC_DECAY_BOUND ? DecayMethod::ClosedFormBound
                                                   : DecayMethod::NumericScan;
    *out = decay_time(ch->model, {alpha, m});
  });
}

/* ------------------------------------------------------------------ */

int ec_count_tail(int family, int64_t n_trials, double mean, double p_single,
                  int64_t xi, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("null output");
    *out = count_tail({family_of(family), n_trials, mean, p_single}, xi);
  });
}

int ec_count_pmf(int family, int64_t n_trials, double mean, double p_single,
                 int64_t w, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("null output");
    *out = count_pmf({family_of(family), n_trials, mean, p_single}, w);
  });
}

int ec_isi_mean(const ec_channel* ch, const uint8_t* bits, int n_bits, double t_b,
                int j, int isi, int dt_aligned, double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    *out = isi_mean(static_cast<std::size_t>(j), sequence_of(bits, n_bits, t_b),
                    ch->model, isi_of(isi), sampling_of(dt_aligned));
  });
}

int ec_bit_error_prob(const ec_channel* ch, const uint8_t* bits, int n_bits, double t_b,
                      int j, int64_t xi, int family, int isi, int dt_aligned,
                      double* out) {
  return guarded([&] {
    if (!ch || !out) throw std::invalid_argument("null argument");
    *out = bit_error_prob(static_cast<std::size_t>(j), sequence_of(bits, n_bits, t_b),
                          ch->model, xi, family_of(family), isi_of(isi),
                          sampling_of(dt_aligned));
  });
}

int ec_mean_error_prob(const ec_channel* ch, double t_b, int64_t xi, int family,
                       int isi, int n_bits, int n_sequences, double p1,
                       uint64_t seed, int n_threads, int dt_aligned,
                       double* mean_out, double* per_bit_out) {
  return guarded([&] {
    if (!ch || !mean_out) throw std::invalid_argument("null argument");
    const double prob1 = p1 < 0.0 ? ch->model.cfg.p1 : p1;
    const ErrorReport report =
        mean_error_prob(ch->model, t_b, xi, family_of(family), isi_of(isi), n_bits,
                        n_sequences, prob1, seed, n_threads, sampling_of(dt_aligned));
    *mean_out = report.mean_error;
    if (per_bit_out)
      for (int j = 0; j < n_bits; ++j)
        per_bit_out[j] = report.per_bit[static_cast<std::size_t>(j)];
  });
}

/* ------------------------------------------------------------------ */

ec_sim* ec_sim_create(const ec_config* cfg, uint64_t seed, int ea_as_a) {
  return guarded_ptr([&]() -> ec_sim* {
    if (!cfg) throw std::invalid_argument("null config");
    return new ec_sim{SimState(cfg->loaded.cfg, seed, SimOptions{ea_as_a != 0})};
  });
}

void ec_sim_free(ec_sim* sim) { delete sim; }

int ec_sim_emit(ec_sim* sim) {
  return guarded([&] {
    if (!sim) throw std::invalid_argument("null sim");
    sim->state.emit();
  });
}

int ec_sim_step(ec_sim* sim) {
  return guarded([&] {
    if (!sim) throw std::invalid_argument("null sim");
    sim->state.step();
  });
}

int64_t ec_sim_observe(const ec_sim* sim) { return sim ? sim->state.observe() : 0; }
int64_t ec_sim_clock(const ec_sim* sim) { return sim ? sim->state.clock() : 0; }

int ec_sim_counts(const ec_sim* sim, int64_t* n_e, int64_t* n_ea, int64_t* n_a_free,
                  int64_t* n_a_degraded) {
  return guarded([&] {
    if (!sim) throw std::invalid_argument("null sim");
    const SimCounts c = sim->state.counts();
    if (n_e) *n_e = c.n_e;
    if (n_ea) *n_ea = c.n_ea;
    if (n_a_free) *n_a_free = c.n_a_free;
    if (n_a_degraded) *n_a_degraded = c.n_a_degraded;
  });
}

int ec_sim_run_trial(const ec_config* cfg, const uint8_t* bits, int n_bits,
                     double t_b, const double* sample_times, int n_samples,
                     uint64_t seed, int ea_as_a, int64_t* counts_out,
                     int64_t* world_out) {
  return guarded([&] {
    if (!cfg || !sample_times || !counts_out) throw std::invalid_argument("null argument");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const ObservationSeries series = run_trial(
        cfg->loaded.cfg, sequence_of(bits, n_bits, t_b),
        std::span<const double>(sample_times, static_cast<std::size_t>(n_samples)), seed,
        SimOptions{ea_as_a != 0});
    for (int i = 0; i < n_samples; ++i) {
      counts_out[i] = series.counts[static_cast<std::size_t>(i)];
      if (world_out) {
        const SimCounts& w = series.world[static_cast<std::size_t>(i)];
        world_out[4 * i + 0] = w.n_e;
        world_out[4 * i + 1] = w.n_ea;
        world_out[4 * i + 2] = w.n_a_free;
        world_out[4 * i + 3] = w.n_a_degraded;
      }
    }
  });
}

/* ------------------------------------------------------------------ */

void ec_experiment_init(ec_experiment* spec) {
  if (!spec) return;
  std::memset(spec, 0, sizeof *spec);
  spec->name = "experiment";
  spec->system = "system1";
  spec->mode = EC_MODE_IMPULSE_RESPONSE;
  spec->trials = 1000;
  spec->sequences = 1000;
  spec->n_bits = 50;
  spec->enzymes = 1;
  spec->master_seed = 1;
  spec->family = EC_FAMILY_POISSON;
  spec->isi = EC_ISI_FULL;
  spec->threads = 1;
  spec->t_start_us = 5.0;
  spec->t_end_us = 200.0;
  spec->t_step_us = 5.0;
  spec->alpha_min = 0.05;
  spec->alpha_max = 0.95;
  spec->alpha_step = 0.05;
  spec->budget_cap = 1e12;
}

ec_table* ec_run_experiment(const ec_experiment* spec) {
  return guarded_ptr([&]() -> ec_table* {
    if (!spec) throw ConfigError("null experiment spec");
    return new ec_table{run_experiment(spec_of(*spec))};
  });
}

void ec_table_free(ec_table* table) { delete table; }

ec_table* ec_table_merge(const ec_table* const* tables, int n) {
  return guarded_ptr([&]() -> ec_table* {
    if (!tables || n < 1) throw std::invalid_argument("no tables given");
    std::vector<ResultTable> shards;
    shards.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (!tables[i]) throw std::invalid_argument("null table");
      shards.push_back(tables[i]->table);
    }
    return new ec_table{summarize(shards)};
  });
}

int64_t ec_table_rows(const ec_table* table) {
  return table ? static_cast<int64_t>(table->table.rows.size()) : 0;
}

int ec_table_cols(const ec_table* table) {
  return table ? static_cast<int>(table->table.schema.size()) : 0;
}

const char* ec_table_column_name(const ec_table* table, int col) {
  if (!table || col < 0 || static_cast<std::size_t>(col) >= table->table.schema.size())
    return nullptr;
  return table->table.schema[static_cast<std::size_t>(col)].c_str();
}

int ec_table_column_index(const ec_table* table, const char* name) {
  if (!table || !name) return -1;
  for (std::size_t i = 0; i < table->table.schema.size(); ++i)
    if (table->table.schema[i] == name) return static_cast<int>(i);
  return -1;
}

double ec_table_value(const ec_table* table, int64_t row, int col) {
  if (!table) return 0.0;
  const auto& rows = table->table.rows;
  if (row < 0 || static_cast<std::size_t>(row) >= rows.size()) return 0.0;
  const auto& r = rows[static_cast<std::size_t>(row)];
  if (col < 0 || static_cast<std::size_t>(col) >= r.size()) return 0.0;
  return r[static_cast<std::size_t>(col)];
}

int ec_table_metadata_count(const ec_table* table) {
  return table ? static_cast<int>(table->table.metadata.size()) : 0;
}

const char* ec_table_metadata_key(const ec_table* table, int index) {
  const auto* kv = metadata_at(table, index);
  return kv ? kv->first.c_str() : nullptr;
}

const char* ec_table_metadata_value_at(const ec_table* table, int index) {
  const auto* kv = metadata_at(table, index);
  return kv ? kv->second.c_str() : nullptr;
}

const char* ec_table_metadata_value(const ec_table* table, const char* key) {
  if (!table || !key) return nullptr;
  const auto it = table->table.metadata.find(key);
  return it == table->table.metadata.end() ? nullptr : it->second.c_str();
}

int ec_table_write_csv(const ec_table* table, const char* path) {
  return guarded([&] {
    if (!table || !path) throw std::invalid_argument("null argument");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(std::string("cannot open '") + path + "' for writing");
    write_csv(out, table->table);
    if (!out.good()) throw IoError(std::string("failed writing '") + path + "'");
  });
}

char* ec_table_to_csv(const ec_table* table) {
  return guarded_ptr([&]() -> char* {
    if (!table) throw std::invalid_argument("null table");
    std::ostringstream ss;
    write_csv(ss, table->table);
    return dup_string(ss.str());
  });
}

} /* extern "C" */
