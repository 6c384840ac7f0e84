#pragma once
// Physical constants, species definitions and system configuration shared
// by the analytical channel model and the particle simulator. Everything
// is carried internally in SI base units (m, s, molecule); config files
// use the customary units indicated by their key suffixes (nm, us, um3)
// and are converted on ingestion. All types here are value types, treated
// as immutable once built, and safe to share across threads.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace enzchan {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kBoltzmann = 1.38e-23;  // J/K

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvironmentConstants {
  double boltzmann = kBoltzmann;
  double temperature = 298.0;  // K
  double viscosity = 1e-3;     // kg m^-1 s^-1 (water at 25 C)
};

enum class Species { A, E, EA };

struct SpeciesSpec {
  Species kind = Species::A;
  double radius = 0.0;                 // m
  double diffusion_coefficient = 0.0;  // m^2/s, Einstein relation
};

// Stokes-Einstein: kB*T / (6 pi eta R), evaluated in exactly that grouping.
double diffusion_coefficient(double radius, const EnvironmentConstants& env);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

struct SystemConfig {
  EnvironmentConstants env;
  SpeciesSpec species_a, species_e, species_ea;
  std::int64_t n_emit = 0;    // molecules per impulse (N_A,em)
  std::int64_t n_enzyme = 0;  // enzymes confined to V_enz (N_E)
  double v_enz_side = 0.0;    // m, cube side of the enzyme volume
  double k1 = 0.0;            // molecule^-1 m^3 s^-1 binding
  double k_minus1 = 0.0;      // s^-1 unbinding
  double k2 = 0.0;            // s^-1 degradation
  double rx_distance = 0.0;   // m, |r0| transmitter to receiver center
  double rx_radius = 0.0;     // m, receiver sphere radius
  double dt = 0.0;            // s, simulation time step
  double bit_interval = 0.0;  // s, T_B
  double p1 = 0.5;            // a priori Pr(bit = 1)

  // Derived at construction.
  double v_ob = 0.0;    // m^3, receiver volume
  double c_etot = 0.0;  // molecule/m^3, total enzyme concentration

  double d_a() const { return species_a.diffusion_coefficient; }
  double d_e() const { return species_e.diffusion_coefficient; }
  double d_ea() const { return species_ea.diffusion_coefficient; }
};

struct LoadedConfig {
  SystemConfig cfg;
  std::vector<std::string> warnings;
};

// Flat key/value files, `key = value` per line, `#` comments. Recognized
// keys: v_enz_um3, n_emit, n_enzyme, k1, k_minus1, k2, r0_nm, rob_nm,
// rA_nm, rE_nm, rEA_nm, dt_us, bit_interval_us, p1, temperature_K,
// viscosity. The last four are optional (298 K, 1e-3, p1 = 0.5,
// bit_interval_us = 120 when absent). Unknown keys are an error.
LoadedConfig parse_config_text(std::string_view text);
LoadedConfig load_config_file(const std::string& path);

// Bundled parameter sets "system1", "system2", "system3".
LoadedConfig make_preset(const std::string& name);
const std::vector<std::string>& preset_names();

// Canonical key/value dump in file units; parse_config_text round-trips it.
std::string dump_config(const SystemConfig& cfg);

// Copy with the enzymes removed (N_E = 0, hence c_etot = 0).
SystemConfig without_enzymes(SystemConfig cfg);

// rms one-step separation of an A-E pair, sqrt(2 (D_A + D_E) dt).
double rms_separation(const SystemConfig& cfg);

struct BindingRadius {
  double value = 0.0;     // m
  bool regime_ok = true;  // r_rms >= 5 r_B, validity of the closed form
};

// Binding radius (3 k1 dt / 4 pi)^(1/3) plus its validity flag.
BindingRadius binding_radius(const SystemConfig& cfg);

}  // namespace enzchan
