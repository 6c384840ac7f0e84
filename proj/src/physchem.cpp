#include "enzchan/physchem.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace enzchan {

std::string format_double(double v) {
  char buf[40];
  if (std::fabs(v) < 1e15 && std::round(v) == v) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int prec = 1; prec <= 16; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double diffusion_coefficient(double radius, const EnvironmentConstants& env) {
  if (!(radius > 0.0)) throw std::domain_error("diffusion_coefficient: radius must be > 0");
  if (!(env.temperature > 0.0) || !(env.viscosity > 0.0))
    throw std::domain_error("diffusion_coefficient: temperature and viscosity must be > 0");
  return (env.boltzmann * env.temperature) / (6.0 * kPi * env.viscosity * radius);
}

double rms_separation(const SystemConfig& cfg) {
  return std::sqrt(2.0 * (cfg.d_a() + cfg.d_e()) * cfg.dt);
}

BindingRadius binding_radius(const SystemConfig& cfg) {
  BindingRadius out;
  out.value = std::cbrt(3.0 * cfg.k1 * cfg.dt / (4.0 * kPi));
  out.regime_ok = rms_separation(cfg) >= 5.0 * out.value;
  return out;
}

SystemConfig without_enzymes(SystemConfig cfg) {
  cfg.n_enzyme = 0;
  cfg.c_etot = 0.0;
  return cfg;
}

namespace {

const char* const kRequiredKeys[] = {
    "v_enz_um3", "n_emit", "n_enzyme", "k1", "k_minus1", "k2",
    "r0_nm",     "rob_nm", "rA_nm",    "rE_nm", "rEA_nm", "dt_us",
};
const char* const kOptionalKeys[] = {
    "bit_interval_us", "p1", "temperature_K", "viscosity",
};

bool known_key(const std::string& k) {
  for (const char* r : kRequiredKeys)
    if (k == r) return true;
  for (const char* o : kOptionalKeys)
    if (k == o) return true;
  return false;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
  }
}

std::int64_t parse_count(const std::string& key, double v) {
  if (v < 0 || v != std::floor(v) || v > 9e18)
    throw ConfigError("config: key '" + key + "' must be a nonnegative integer");
  return static_cast<std::int64_t>(v);
}

LoadedConfig build_from_map(const std::map<std::string, double>& kv) {
  auto get = [&](const char* key) { return kv.at(key); };
  auto get_or = [&](const char* key, double dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  };

  SystemConfig cfg;
  cfg.env.temperature = get_or("temperature_K", 298.0);
  cfg.env.viscosity = get_or("viscosity", 1e-3);
  if (!(cfg.env.temperature > 0)) throw ConfigError("config: temperature_K must be > 0");
  if (!(cfg.env.viscosity > 0)) throw ConfigError("config: viscosity must be > 0");

  auto species = [&](Species kind, const char* key) {
    double r = get(key) * 1e-9;
    if (!(r > 0)) throw ConfigError(std::string("config: ") + key + " must be > 0");
    return SpeciesSpec{kind, r, diffusion_coefficient(r, cfg.env)};
  };
  cfg.species_a = species(Species::A, "rA_nm");
  cfg.species_e = species(Species::E, "rE_nm");
  cfg.species_ea = species(Species::EA, "rEA_nm");

  double v_um3 = get("v_enz_um3");
  if (!(v_um3 > 0)) throw ConfigError("config: v_enz_um3 must be > 0");
  cfg.v_enz_side = std::cbrt(v_um3) * 1e-6;

  cfg.n_emit = parse_count("n_emit", get("n_emit"));
  cfg.n_enzyme = parse_count("n_enzyme", get("n_enzyme"));
  cfg.k1 = get("k1");
  cfg.k_minus1 = get("k_minus1");
  cfg.k2 = get("k2");
  if (cfg.k1 < 0 || cfg.k_minus1 < 0 || cfg.k2 < 0)
    throw ConfigError("config: rate constants must be nonnegative");

  cfg.rx_distance = get("r0_nm") * 1e-9;
  cfg.rx_radius = get("rob_nm") * 1e-9;
  if (!(cfg.rx_distance > 0)) throw ConfigError("config: r0_nm must be > 0");
  if (!(cfg.rx_radius > 0)) throw ConfigError("config: rob_nm must be > 0");
  if (!(cfg.rx_radius < cfg.rx_distance))
    throw ConfigError("config: rob_nm must be smaller than r0_nm");
  if (cfg.v_enz_side < 3.0 * cfg.rx_distance)
    throw ConfigError("config: V_enz side must be at least 3x the receiver distance");

  cfg.dt = get("dt_us") * 1e-6;
  if (cfg.dt < 0) throw ConfigError("config: dt_us must be nonnegative");
  cfg.bit_interval = get_or("bit_interval_us", 120.0) * 1e-6;
  if (cfg.bit_interval < 0) throw ConfigError("config: bit_interval_us must be nonnegative");

  cfg.p1 = get_or("p1", 0.5);
  if (!(cfg.p1 >= 0.0 && cfg.p1 <= 1.0)) throw ConfigError("config: p1 must be in [0,1]");

  cfg.v_ob = (4.0 / 3.0) * kPi * cfg.rx_radius * cfg.rx_radius * cfg.rx_radius;
  cfg.c_etot = static_cast<double>(cfg.n_enzyme) /
               (cfg.v_enz_side * cfg.v_enz_side * cfg.v_enz_side);

  LoadedConfig out{cfg, {}};
  BindingRadius rb = binding_radius(cfg);
  if (!rb.regime_ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "r_rms (%.3g nm) is less than 5x the binding radius (%.3g nm); "
                  "the binding-radius closed form is outside its validity regime",
                  rms_separation(cfg) * 1e9, rb.value * 1e9);
    out.warnings.emplace_back(buf);
  }
  return out;
}

}  // namespace

LoadedConfig parse_config_text(std::string_view text) {
  std::map<std::string, double> kv;
  size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (size_t h = line.find('#'); h != std::string::npos) line.resize(h);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!known_key(key))
      throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(line_no));
    if (kv.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = parse_number(key, value);
  }
  for (const char* r : kRequiredKeys)
    if (!kv.count(r)) throw ConfigError(std::string("config: missing key '") + r + "'");
  return build_from_map(kv);
}

LoadedConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

// Table of bundled systems, in config-file units.
struct Preset {
  const char* name;
  double v_um3, n_emit, n_enzyme, k1, k_minus1, k2, r0, rob, dt;
};
const Preset kPresets[] = {
    {"system1", 1.0, 5e3, 1e5, 2e-19, 1e4, 1e6, 300.0, 45.0, 0.5},
    {"system2", 37.0, 5e3, 3.7e6, 1.79e-20, 900.0, 9e4, 1000.0, 150.0, 5.0},
    {"system3", 1.0, 2e4, 1e5, 2e-19, 1e4, 1e6, 300.0, 45.0, 0.5},
};

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"system1", "system2", "system3"};
  return names;
}

LoadedConfig make_preset(const std::string& name) {
  for (const Preset& p : kPresets) {
    if (name != p.name) continue;
    std::map<std::string, double> kv = {
        {"v_enz_um3", p.v_um3}, {"n_emit", p.n_emit}, {"n_enzyme", p.n_enzyme},
        {"k1", p.k1},           {"k_minus1", p.k_minus1}, {"k2", p.k2},
        {"r0_nm", p.r0},        {"rob_nm", p.rob},   {"rA_nm", 0.5},
        {"rE_nm", 2.5},         {"rEA_nm", 3.0},     {"dt_us", p.dt},
        {"bit_interval_us", 120.0}, {"p1", 0.5},
        {"temperature_K", 298.0},   {"viscosity", 1e-3},
    };
    return build_from_map(kv);
  }
  throw ConfigError("config: unknown preset '" + name + "' (expected system1, system2 or system3)");
}

namespace {

// Shortest decimal in file units that converts back to the exact stored
// SI value (unit conversions are not bit-invertible on their own).
template <class ToSi>
std::string format_in_unit(double display, double si, ToSi to_si) {
  char buf[40];
  const double rounded = std::round(display);
  if (std::fabs(display) < 1e15 && to_si(rounded) == si) {
    std::snprintf(buf, sizeof buf, "%.0f", rounded);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, display);
    if (to_si(std::strtod(buf, nullptr)) == si) return buf;
  }
  return buf;
}

}  // namespace

std::string dump_config(const SystemConfig& cfg) {
  auto plain = [](double v) {
    return format_in_unit(v, v, [](double x) { return x; });
  };
  auto nm = [](double si) {
    return format_in_unit(si * 1e9, si, [](double x) { return x * 1e-9; });
  };
  auto us = [](double si) {
    return format_in_unit(si * 1e6, si, [](double x) { return x * 1e-6; });
  };
  const double side_um = cfg.v_enz_side * 1e6;
  std::ostringstream out;
  out << "v_enz_um3 = "
      << format_in_unit(side_um * side_um * side_um, cfg.v_enz_side,
                        [](double x) { return std::cbrt(x) * 1e-6; })
      << "\n";
  out << "n_emit = " << cfg.n_emit << "\n";
  out << "n_enzyme = " << cfg.n_enzyme << "\n";
  out << "k1 = " << plain(cfg.k1) << "\n";
  out << "k_minus1 = " << plain(cfg.k_minus1) << "\n";
  out << "k2 = " << plain(cfg.k2) << "\n";
  out << "r0_nm = " << nm(cfg.rx_distance) << "\n";
  out << "rob_nm = " << nm(cfg.rx_radius) << "\n";
  out << "rA_nm = " << nm(cfg.species_a.radius) << "\n";
  out << "rE_nm = " << nm(cfg.species_e.radius) << "\n";
  out << "rEA_nm = " << nm(cfg.species_ea.radius) << "\n";
  out << "dt_us = " << us(cfg.dt) << "\n";
  out << "bit_interval_us = " << us(cfg.bit_interval) << "\n";
  out << "p1 = " << plain(cfg.p1) << "\n";
  out << "temperature_K = " << plain(cfg.env.temperature) << "\n";
  out << "viscosity = " << plain(cfg.env.viscosity) << "\n";
  return out.str();
}

}  // namespace enzchan
