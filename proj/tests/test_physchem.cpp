#include <doctest.h>

#include <cmath>

#include "enzchan/physchem.hpp"

using namespace enzchan;

namespace {

double round_sig3(double v) {
  if (v == 0.0) return 0.0;
  const double mag = std::pow(10.0, std::floor(std::log10(std::fabs(v))) - 2.0);
  return std::round(v / mag) * mag;
}

}  // namespace

TEST_CASE("einstein relation reproduces the reference coefficient") {
  EnvironmentConstants env;  // 298 K, 1e-3 viscosity
  const double d = diffusion_coefficient(0.5e-9, env);
  // High-precision evaluation of kB*T / (6 pi eta R) for R = 0.5 nm.
  CHECK(d == doctest::Approx(4.3633919198e-10).epsilon(1e-9));
  CHECK_THROWS_AS(diffusion_coefficient(0.0, env), std::domain_error);
  CHECK_THROWS_AS(diffusion_coefficient(-1e-9, env), std::domain_error);
}

TEST_CASE("diffusion coefficient scales inversely with radius") {
  EnvironmentConstants env;
  const double base = diffusion_coefficient(0.5e-9, env);
  CHECK(diffusion_coefficient(1.0e-9, env) == doctest::Approx(0.5 * base).epsilon(1e-12));
  CHECK(diffusion_coefficient(2.5e-9, env) == doctest::Approx(base / 5.0).epsilon(1e-12));
}

TEST_CASE("diffusion coefficient monotone in radius and temperature") {
  EnvironmentConstants env;
  double prev = diffusion_coefficient(0.1e-9, env);
  for (double r = 0.2e-9; r <= 5e-9; r += 0.1e-9) {
    const double d = diffusion_coefficient(r, env);
    CHECK(d < prev);
    prev = d;
  }
  prev = 0.0;
  for (double t = 250.0; t <= 370.0; t += 5.0) {
    EnvironmentConstants e2{kBoltzmann, t, 1e-3};
    const double d = diffusion_coefficient(1e-9, e2);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("presets reproduce the published derived lengths") {
  struct Expect {
    const char* name;
    double r_rms_nm, r_b_nm;
  };
  const Expect expected[] = {
      {"system1", 22.9, 2.88}, {"system2", 72.4, 2.77}, {"system3", 22.9, 2.88}};
  for (const auto& e : expected) {
    CAPTURE(e.name);
    const SystemConfig cfg = make_preset(e.name).cfg;
    CHECK(round_sig3(rms_separation(cfg) * 1e9) == doctest::Approx(e.r_rms_nm));
    CHECK(round_sig3(binding_radius(cfg).value * 1e9) == doctest::Approx(e.r_b_nm));
    CHECK(std::fabs(rms_separation(cfg) * 1e9 - e.r_rms_nm) < 0.1);
    CHECK(std::fabs(binding_radius(cfg).value * 1e9 - e.r_b_nm) < 0.01);
    CHECK(binding_radius(cfg).regime_ok);
    // Enzyme concentration is 1e23 molecule/m^3 (166 uM) in all systems.
    CHECK(round_sig3(cfg.c_etot) == doctest::Approx(1e23));
  }
}

TEST_CASE("binding radius edge cases") {
  SystemConfig cfg = make_preset("system1").cfg;
  cfg.k1 = 0.0;
  const BindingRadius rb = binding_radius(cfg);
  CHECK(rb.value == 0.0);
  CHECK(rb.regime_ok);

  cfg = make_preset("system1").cfg;
  cfg.dt = 0.0;
  CHECK(rms_separation(cfg) == 0.0);
}

TEST_CASE("config parser accepts the documented keys and units") {
  const char* text =
      "# comment line\n"
      "v_enz_um3 = 1\n"
      "n_emit = 5000\n"
      "n_enzyme = 100000\n"
      "k1 = 2e-19\n"
      "k_minus1 = 1e4\n"
      "k2 = 1e6   # trailing comment\n"
      "r0_nm = 300\n"
      "rob_nm = 45\n"
      "rA_nm = 0.5\n"
      "rE_nm = 2.5\n"
      "rEA_nm = 3\n"
      "dt_us = 0.5\n"
      "bit_interval_us = 120\n"
      "p1 = 0.5\n"
      "temperature_K = 298\n"
      "viscosity = 1e-3\n";
  const LoadedConfig loaded = parse_config_text(text);
  const SystemConfig preset = make_preset("system1").cfg;
  CHECK(loaded.cfg.v_enz_side == doctest::Approx(preset.v_enz_side).epsilon(1e-12));
  CHECK(loaded.cfg.n_emit == preset.n_emit);
  CHECK(loaded.cfg.n_enzyme == preset.n_enzyme);
  CHECK(loaded.cfg.d_a() == doctest::Approx(preset.d_a()).epsilon(1e-14));
  CHECK(loaded.cfg.dt == doctest::Approx(0.5e-6));
  CHECK(loaded.cfg.bit_interval == doctest::Approx(120e-6));
  CHECK(loaded.warnings.empty());
}

TEST_CASE("config defaults for the optional keys") {
  const char* text =
      "v_enz_um3 = 1\nn_emit = 10\nn_enzyme = 0\nk1 = 0\nk_minus1 = 0\nk2 = 0\n"
      "r0_nm = 300\nrob_nm = 45\nrA_nm = 0.5\nrE_nm = 2.5\nrEA_nm = 3\ndt_us = 0.5\n";
  const LoadedConfig loaded = parse_config_text(text);
  CHECK(loaded.cfg.env.temperature == 298.0);
  CHECK(loaded.cfg.env.viscosity == 1e-3);
  CHECK(loaded.cfg.p1 == 0.5);
  CHECK(loaded.cfg.bit_interval == doctest::Approx(120e-6));
  CHECK(loaded.cfg.c_etot == 0.0);
}

TEST_CASE("config validation rejects bad inputs") {
  auto with = [](const std::string& extra) {
    return "v_enz_um3 = 1\nn_emit = 10\nn_enzyme = 1\nk1 = 1e-19\nk_minus1 = 1\nk2 = 1\n"
           "rA_nm = 0.5\nrE_nm = 2.5\nrEA_nm = 3\ndt_us = 0.5\n" +
           extra;
  };
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300\nrob_nm = 300\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 400\nrob_nm = 45\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300\nrob_nm = 45\np1 = 1.5\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300\nrob_nm = 45\nbogus = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300\nrob_nm = 45\nk2 = -1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300\nrob_nm = 45\nn_emit = 1.5\n")), ConfigError);
  CHECK_THROWS_AS(parse_config_text(with("r0_nm = 300")), ConfigError);  // missing rob_nm
  CHECK_THROWS_AS(parse_config_text("v_enz_um3 = x\n"), ConfigError);
  CHECK_THROWS_AS(make_preset("system9"), ConfigError);
}

TEST_CASE("binding-regime violation loads with a warning, not an error") {
  // Tiny time step: r_rms shrinks as sqrt(dt), r_B only as dt^(1/3).
  const char* text =
      "v_enz_um3 = 1\nn_emit = 10\nn_enzyme = 10\nk1 = 2e-19\nk_minus1 = 0\nk2 = 0\n"
      "r0_nm = 300\nrob_nm = 45\nrA_nm = 0.5\nrE_nm = 2.5\nrEA_nm = 3\ndt_us = 1e-3\n";
  const LoadedConfig loaded = parse_config_text(text);
  REQUIRE(loaded.warnings.size() == 1);
  CHECK(!binding_radius(loaded.cfg).regime_ok);
}

TEST_CASE("dump and parse round-trip") {
  for (const std::string& name : preset_names()) {
    const SystemConfig cfg = make_preset(name).cfg;
    const LoadedConfig back = parse_config_text(dump_config(cfg));
    CHECK(back.cfg.v_enz_side == doctest::Approx(cfg.v_enz_side).epsilon(1e-12));
    CHECK(back.cfg.n_emit == cfg.n_emit);
    CHECK(back.cfg.n_enzyme == cfg.n_enzyme);
    CHECK(back.cfg.k1 == cfg.k1);
    CHECK(back.cfg.k_minus1 == cfg.k_minus1);
    CHECK(back.cfg.k2 == cfg.k2);
    CHECK(back.cfg.rx_distance == doctest::Approx(cfg.rx_distance).epsilon(1e-14));
    CHECK(back.cfg.rx_radius == doctest::Approx(cfg.rx_radius).epsilon(1e-14));
    CHECK(back.cfg.dt == doctest::Approx(cfg.dt).epsilon(1e-14));
    CHECK(back.cfg.p1 == cfg.p1);
  }
}

TEST_CASE("without_enzymes clears the enzyme pool") {
  const SystemConfig cfg = without_enzymes(make_preset("system1").cfg);
  CHECK(cfg.n_enzyme == 0);
  CHECK(cfg.c_etot == 0.0);
}
