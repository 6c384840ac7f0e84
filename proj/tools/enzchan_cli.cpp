// Command-line front end. Talks to the library exclusively through the
// C API in enzchan.h.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "enzchan/enzchan.h"

namespace {

struct ConfigDeleter {
  void operator()(ec_config* c) const { ec_config_free(c); }
};
struct ChannelDeleter {
  void operator()(ec_channel* c) const { ec_channel_free(c); }
};
struct TableDeleter {
  void operator()(ec_table* t) const { ec_table_free(t); }
};
using ConfigPtr = std::unique_ptr<ec_config, ConfigDeleter>;
using ChannelPtr = std::unique_ptr<ec_channel, ChannelDeleter>;
using TablePtr = std::unique_ptr<ec_table, TableDeleter>;

int exit_code_for(int status) {
  switch (status) {
    case EC_OK: return 0;
    case EC_ERR_CONFIG: return 2;
    case EC_ERR_BUDGET: return 3;
    default: return 1;
  }
}

int fail(int status) {
  std::fprintf(stderr, "error: %s\n", ec_last_error());
  return exit_code_for(status);
}

struct CommonOpts {
  std::string system = "system1";
  std::string enzymes = "on";
  long long trials = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string isi = "full";
  std::string family = "poisson";
  int threads = 1;
  double budget = 1e12;
  std::string ea_diffusion = "einstein";
  std::string per_trial_out;
  bool plot_script = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, long long default_trials) {
  opts.trials = default_trials;
  cmd->add_option("--system", opts.system, "Preset name (system1|system2|system3) or config file path");
  cmd->add_option("--enzymes", opts.enzymes, "Simulate with enzymes present (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--trials", opts.trials, "Simulated trials (0 = analytic only)");
  cmd->add_option("--seed", opts.seed, "Master seed");
  cmd->add_option("--out", opts.out, "Write the result table to this CSV file (default: stdout)");
  cmd->add_option("--isi", opts.isi, "ISI depth for analytic error curves (none|prev|full)")
      ->check(CLI::IsMember({"none", "prev", "full"}));
  cmd->add_option("--family", opts.family, "Count distribution (binomial|poisson|gaussian)")
      ->check(CLI::IsMember({"binomial", "poisson", "gaussian"}));
  cmd->add_option("--threads", opts.threads, "Worker threads for trials/sequences");
  cmd->add_option("--budget", opts.budget, "Particle-step budget cap before refusing a run");
  cmd->add_option("--ea-diffusion", opts.ea_diffusion,
                  "Intermediate diffusion coefficient (einstein|same-as-a)")
      ->check(CLI::IsMember({"einstein", "same-as-a"}));
  cmd->add_option("--per-trial-out", opts.per_trial_out,
                  "Also write one CSV row per (trial, sample time) to this path");
  cmd->add_flag("--plot-script", opts.plot_script,
                "With --out, also write a generic matplotlib script next to the CSV");
}

int family_code(const std::string& s) {
  if (s == "binomial") return EC_FAMILY_BINOMIAL;
  if (s == "gaussian") return EC_FAMILY_GAUSSIAN;
  return EC_FAMILY_POISSON;
}

int isi_code(const std::string& s) {
  if (s == "none") return EC_ISI_NONE;
  if (s == "prev") return EC_ISI_PREV;
  return EC_ISI_FULL;
}

void fill_experiment(ec_experiment& e, const CommonOpts& opts) {
  ec_experiment_init(&e);
  e.system = opts.system.c_str();
  e.enzymes = opts.enzymes == "on" ? 1 : 0;
  e.trials = opts.trials;
  e.master_seed = opts.seed;
  e.family = family_code(opts.family);
  e.isi = isi_code(opts.isi);
  e.threads = opts.threads;
  e.budget_cap = opts.budget;
  e.ea_diffuses_as_a = opts.ea_diffusion == "same-as-a" ? 1 : 0;
  if (!opts.per_trial_out.empty()) e.per_trial_out = opts.per_trial_out.c_str();
}

ConfigPtr open_config(const std::string& system, int* status) {
  ConfigPtr cfg;
  bool preset = false;
  for (int i = 0; i < ec_preset_count(); ++i)
    if (system == ec_preset_name(i)) preset = true;
  cfg.reset(preset ? ec_config_preset(system.c_str()) : ec_config_load(system.c_str()));
  *status = cfg ? EC_OK : EC_ERR_CONFIG;
  if (cfg) {
    for (int i = 0; i < ec_config_warning_count(cfg.get()); ++i)
      std::fprintf(stderr, "warning: %s\n", ec_config_warning(cfg.get(), i));
  }
  return cfg;
}

void write_plot_script(const std::string& csv_path) {
  const std::string path = csv_path + ".py";
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) {
    std::fprintf(stderr, "warning: cannot write %s\n", path.c_str());
    return;
  }
  std::fprintf(f,
               "#!/usr/bin/env python3\n"
               "# Plots every numeric column of %s against its first column.\n"
               "import math\n"
               "import matplotlib\n"
               "matplotlib.use(\"Agg\")\n"
               "import matplotlib.pyplot as plt\n\n"
               "rows = []\n"
               "with open(%c%s%c) as fh:\n"
               "    for line in fh:\n"
               "        if line.startswith(\"#\") or not line.strip():\n"
               "            continue\n"
               "        rows.append(line.strip().split(\",\"))\n"
               "header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]\n"
               "x = [r[0] for r in data]\n"
               "for c in range(1, len(header)):\n"
               "    ys = [r[c] for r in data]\n"
               "    if all(math.isnan(y) for y in ys):\n"
               "        continue\n"
               "    plt.plot(x, ys, marker=\".\", label=header[c])\n"
               "plt.xlabel(header[0])\n"
               "plt.legend(fontsize=8)\n"
               "plt.grid(True, alpha=0.4)\n"
               "plt.savefig(%c%s.png%c, dpi=150)\n"
               "print(\"wrote %s.png\")\n",
               csv_path.c_str(), '"', csv_path.c_str(), '"', '"', csv_path.c_str(),
               '"', csv_path.c_str());
  std::fclose(f);
  std::fprintf(stderr, "wrote %s\n", path.c_str());
}

int emit_table(const TablePtr& table, const CommonOpts& opts) {
  if (!opts.out.empty()) {
    const int rc = ec_table_write_csv(table.get(), opts.out.c_str());
    if (rc != EC_OK) return fail(rc);
    std::fprintf(stderr, "wrote %s (%lld rows)\n", opts.out.c_str(),
                 static_cast<long long>(ec_table_rows(table.get())));
    if (opts.plot_script) write_plot_script(opts.out);
    return 0;
  }
  char* text = ec_table_to_csv(table.get());
  if (!text) return fail(EC_ERR);
  std::fputs(text, stdout);
  ec_string_free(text);
  return 0;
}

int cmd_presets(const std::string& which) {
  for (int i = 0; i < ec_preset_count(); ++i) {
    const char* name = ec_preset_name(i);
    if (!which.empty() && which != name) continue;
    ConfigPtr cfg(ec_config_preset(name));
    if (!cfg) return fail(EC_ERR_CONFIG);
    char* text = ec_config_dump(cfg.get());
    if (!text) return fail(EC_ERR);
    std::printf("# %s\n%s\n", name, text);
    ec_string_free(text);
  }
  return 0;
}

int cmd_analytic_peaks(const CommonOpts& opts) {
  int status = EC_OK;
  ConfigPtr cfg = open_config(opts.system, &status);
  if (!cfg) return fail(status);
  ChannelPtr enz(ec_channel_create(cfg.get(), 1));
  ChannelPtr noenz(ec_channel_create(cfg.get(), 0));
  if (!enz || !noenz) return fail(EC_ERR);

  double r_rms = 0, r_b = 0, c_etot = 0;
  ec_config_get(cfg.get(), "r_rms", &r_rms);
  ec_config_get(cfg.get(), "r_b", &r_b);
  ec_config_get(cfg.get(), "c_etot", &c_etot);

  std::printf("quantity,enzymes,no_enzymes\n");
  std::printf("t_max_us,%.6g,%.6g\n", ec_channel_peak_time(enz.get()) * 1e6,
              ec_channel_peak_time(noenz.get()) * 1e6);
  std::printf("n_max,%.6g,%.6g\n", ec_channel_peak_count(enz.get()),
              ec_channel_peak_count(noenz.get()));
  std::printf("sampling_time_us,%.6g,%.6g\n", ec_channel_sampling_time(enz.get()) * 1e6,
              ec_channel_sampling_time(noenz.get()) * 1e6);
  std::printf("c_etot_per_m3,%.6g,0\n", c_etot);
  std::printf("r_rms_nm,%.6g,%.6g\n", r_rms * 1e9, r_rms * 1e9);
  std::printf("r_b_nm,%.6g,%.6g\n", r_b * 1e9, r_b * 1e9);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"enzchan: enzyme-assisted diffusive molecular communication toolkit"};
  app.require_subcommand(1);

  // presets
  auto* presets = app.add_subcommand("presets", "Print the bundled system parameter sets");
  std::string presets_system;
  presets->add_option("--system", presets_system, "Limit to one preset");

  // analytic
  auto* analytic = app.add_subcommand("analytic", "Closed-form curves, peaks and decay times");
  CommonOpts an_opts;
  add_common(analytic, an_opts, 0);
  std::string an_what = "peaks";
  analytic->add_option("--what", an_what, "peaks | decay | response")
      ->check(CLI::IsMember({"peaks", "decay", "response"}));
  double an_alpha_min = 0.05, an_alpha_max = 0.95, an_alpha_step = 0.05;
  analytic->add_option("--alpha-min", an_alpha_min);
  analytic->add_option("--alpha-max", an_alpha_max);
  analytic->add_option("--alpha-step", an_alpha_step);
  double an_t_start = 5, an_t_end = 200, an_t_step = 5;
  analytic->add_option("--t-start", an_t_start, "Response grid start, us");
  analytic->add_option("--t-end", an_t_end, "Response grid end, us");
  analytic->add_option("--t-step", an_t_step, "Response grid step, us");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Impulse-response trials vs the analytic curves");
  CommonOpts sim_opts;
  add_common(simulate, sim_opts, 1000);
  double sim_t_start = 5, sim_t_end = 200, sim_t_step = 5;
  simulate->add_option("--t-start", sim_t_start, "Sample grid start, us");
  simulate->add_option("--t-end", sim_t_end, "Sample grid end, us");
  simulate->add_option("--t-step", sim_t_step, "Sample grid step, us");

  // detect
  auto* detect = app.add_subcommand("detect", "First-bit detection probability vs threshold");
  CommonOpts det_opts;
  add_common(detect, det_opts, 1000);
  std::vector<std::int64_t> det_thresholds;
  detect->add_option("--thresholds", det_thresholds, "Decision thresholds")->delimiter(',');

  // ber
  auto* ber = app.add_subcommand("ber", "Bit error probability, known or random sequences");
  CommonOpts ber_opts;
  add_common(ber, ber_opts, 0);
  std::string ber_bits;
  ber->add_option("--bits", ber_bits, "Known bit pattern (e.g. 1111100000); omit for random sequences");
  double ber_tb = 0.0;
  ber->add_option("--tb", ber_tb, "Bit interval, us (default: config value)");
  std::int64_t ber_xi = 1;
  ber->add_option("--xi", ber_xi, "Decision threshold");
  long long ber_sequences = 1000;
  ber->add_option("--sequences", ber_sequences, "Random sequences for the analytic average");
  int ber_nbits = 50;
  ber->add_option("--nbits", ber_nbits, "Bits per random sequence");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Mean error probability over a (T_B, threshold) grid");
  CommonOpts sw_opts;
  add_common(sweep, sw_opts, 0);
  std::vector<double> sw_tb;
  sweep->add_option("--tb", sw_tb, "Bit intervals, us")->delimiter(',');
  std::vector<std::int64_t> sw_thresholds;
  sweep->add_option("--thresholds", sw_thresholds, "Decision thresholds")->delimiter(',');
  long long sw_sequences = 1000;
  sweep->add_option("--sequences", sw_sequences, "Random sequences for the analytic average");
  int sw_nbits = 50;
  sweep->add_option("--nbits", sw_nbits, "Bits per sequence");

  CLI11_PARSE(app, argc, argv);

  if (presets->parsed()) return cmd_presets(presets_system);

  if (analytic->parsed()) {
    if (an_what == "peaks") return cmd_analytic_peaks(an_opts);
    ec_experiment e;
    fill_experiment(e, an_opts);
    e.trials = 0;
    if (an_what == "decay") {
      e.mode = EC_MODE_DECAY_INTERVAL;
      e.alpha_min = an_alpha_min;
      e.alpha_max = an_alpha_max;
      e.alpha_step = an_alpha_step;
      e.name = "decay";
    } else {
      e.mode = EC_MODE_IMPULSE_RESPONSE;
      e.t_start_us = an_t_start;
      e.t_end_us = an_t_end;
      e.t_step_us = an_t_step;
      e.name = "response";
    }
    TablePtr table(ec_run_experiment(&e));
    if (!table) return fail(ec_last_status());
    return emit_table(table, an_opts);
  }

  if (simulate->parsed()) {
    ec_experiment e;
    fill_experiment(e, sim_opts);
    e.mode = EC_MODE_IMPULSE_RESPONSE;
    e.t_start_us = sim_t_start;
    e.t_end_us = sim_t_end;
    e.t_step_us = sim_t_step;
    e.name = "simulate";
    TablePtr table(ec_run_experiment(&e));
    if (!table) return fail(ec_last_status());
    return emit_table(table, sim_opts);
  }

  if (detect->parsed()) {
    ec_experiment e;
    fill_experiment(e, det_opts);
    e.mode = EC_MODE_FIRST_BIT_DETECTION;
    e.name = "detect";
    if (!det_thresholds.empty()) {
      e.thresholds = det_thresholds.data();
      e.n_thresholds = static_cast<int>(det_thresholds.size());
    }
    TablePtr table(ec_run_experiment(&e));
    if (!table) return fail(ec_last_status());
    return emit_table(table, det_opts);
  }

  if (ber->parsed()) {
    ec_experiment e;
    fill_experiment(e, ber_opts);
    e.name = "ber";
    std::vector<double> tbs;
    if (ber_tb > 0) tbs.push_back(ber_tb);
    std::int64_t xi = ber_xi;
    e.thresholds = &xi;
    e.n_thresholds = 1;
    e.sequences = ber_sequences;
    e.n_bits = ber_nbits;
    if (!tbs.empty()) {
      e.t_b_us = tbs.data();
      e.n_t_b = 1;
    }
    if (!ber_bits.empty()) {
      e.mode = EC_MODE_KNOWN_SEQUENCE_ERROR;
      e.bits = ber_bits.c_str();
    } else {
      e.mode = EC_MODE_THRESHOLD_SWEEP;
    }
    TablePtr table(ec_run_experiment(&e));
    if (!table) return fail(ec_last_status());
    return emit_table(table, ber_opts);
  }

  if (sweep->parsed()) {
    ec_experiment e;
    fill_experiment(e, sw_opts);
    e.mode = EC_MODE_THRESHOLD_SWEEP;
    e.name = "sweep";
    e.sequences = sw_sequences;
    e.n_bits = sw_nbits;
    if (!sw_tb.empty()) {
      e.t_b_us = sw_tb.data();
      e.n_t_b = static_cast<int>(sw_tb.size());
    }
    if (!sw_thresholds.empty()) {
      e.thresholds = sw_thresholds.data();
      e.n_thresholds = static_cast<int>(sw_thresholds.size());
    }
    TablePtr table(ec_run_experiment(&e));
    if (!table) return fail(ec_last_status());

    // Report the argmin threshold per bit interval from the table itself.
    const int tb_col = ec_table_column_index(table.get(), "t_b_us");
    const int xi_col = ec_table_column_index(table.get(), "xi");
    const int pe_col = ec_table_column_index(table.get(), "expected_pe");
    double current_tb = -1, best_pe = 0, best_xi = 0;
    auto flush = [&] {
      if (current_tb >= 0)
        std::fprintf(stderr, "T_B=%g us: optimal threshold %g with expected Pe %.6g\n",
                     current_tb, best_xi, best_pe);
    };
    for (std::int64_t r = 0; r < ec_table_rows(table.get()); ++r) {
      const double tb = ec_table_value(table.get(), r, tb_col);
      const double xi = ec_table_value(table.get(), r, xi_col);
      const double pe = ec_table_value(table.get(), r, pe_col);
      if (tb != current_tb) {
        flush();
        current_tb = tb;
        best_pe = pe;
        best_xi = xi;
      } else if (pe < best_pe) {
        best_pe = pe;
        best_xi = xi;
      }
    }
    flush();
    return emit_table(table, sw_opts);
  }

  return 0;
}
