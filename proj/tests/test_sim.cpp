#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "enzchan/sim.hpp"

using namespace enzchan;

namespace {

// Small world for invariant checks: 300 nm cube, receiver 20 nm at 90 nm.
SystemConfig small_config(std::int64_t n_emit, std::int64_t n_enzyme) {
  std::ostringstream text;
  text << "v_enz_um3 = 0.027\nn_emit = " << n_emit << "\nn_enzyme = " << n_enzyme
       << "\nk1 = 2e-19\nk_minus1 = 1e4\nk2 = 1e6\nr0_nm = 90\nrob_nm = 20\n"
          "rA_nm = 0.5\nrE_nm = 2.5\nrEA_nm = 3\ndt_us = 0.5\nbit_interval_us = 30\n";
  return parse_config_text(text.str()).cfg;
}

SystemConfig inert_config(std::int64_t n_emit) {
  SystemConfig cfg = small_config(n_emit, 0);
  cfg.k1 = cfg.k_minus1 = cfg.k2 = 0.0;
  return cfg;
}

bool inside_cube(const Vec3& p, double half) {
  return p.x >= -half && p.x <= half && p.y >= -half && p.y <= half && p.z >= -half &&
         p.z <= half;
}

}  // namespace

TEST_CASE("normal sampler matches the standard normal") {
  Xoshiro256pp rng(2024);
  const auto& zig = ZigguratNormal::instance();
  const int n = 4000000;
  double sum = 0.0, sumsq = 0.0;
  int below_m2 = 0, below_m1 = 0, below_1 = 0, below_2 = 0, beyond_tail = 0;
  const double tail_edge = 3.442619855899;
  for (int i = 0; i < n; ++i) {
    const double x = zig(rng);
    sum += x;
    sumsq += x * x;
    below_m2 += x < -2.0;
    below_m1 += x < -1.0;
    below_1 += x < 1.0;
    below_2 += x < 2.0;
    beyond_tail += std::fabs(x) > tail_edge;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 2.5e-3);        // 5 sigma of the mean estimator
  CHECK(std::fabs(var - 1.0) < 0.01);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  CHECK(std::fabs(static_cast<double>(below_m2) / n - phi(-2.0)) < 1.5e-3);
  CHECK(std::fabs(static_cast<double>(below_m1) / n - phi(-1.0)) < 1.5e-3);
  CHECK(std::fabs(static_cast<double>(below_1) / n - phi(1.0)) < 1.5e-3);
  CHECK(std::fabs(static_cast<double>(below_2) / n - phi(2.0)) < 1.5e-3);
  // The tail path beyond the last layer must fire at the right rate.
  const double p_tail = 2.0 * (1.0 - phi(tail_edge));
  const double expect = n * p_tail;
  CHECK(std::fabs(beyond_tail - expect) < 4.0 * std::sqrt(expect));
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
  CHECK(derive_seed(7, 13, 2) == derive_seed(7, 13, 2));
}

TEST_CASE("emission lattice shapes") {
  SystemConfig cfg = inert_config(1);
  SimState one(cfg, 1);
  one.emit();
  REQUIRE(one.a_positions().size() == 1);
  CHECK(one.a_positions()[0].x == 0.0);
  CHECK(one.a_positions()[0].y == 0.0);
  CHECK(one.a_positions()[0].z == 0.0);

  cfg = inert_config(7);
  SimState seven(cfg, 1);
  seven.emit();
  REQUIRE(seven.a_positions().size() == 7);
  std::multiset<double> dists;
  for (const Vec3& p : seven.a_positions())
    dists.insert(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z));
  CHECK(*dists.begin() == 0.0);
  // Six axis neighbors at one lattice spacing (2 R_A = 1 nm).
  int at_spacing = 0;
  for (double d : dists)
    if (std::fabs(d - 1e-9) < 1e-15) ++at_spacing;
  CHECK(at_spacing == 6);
}

TEST_CASE("emitted cloud is centered on the transmitter") {
  SystemConfig cfg = inert_config(5000);
  SimState s(cfg, 1);
  s.emit();
  REQUIRE(s.a_positions().size() == 5000);
  Vec3 com{0, 0, 0};
  for (const Vec3& p : s.a_positions()) {
    com.x += p.x;
    com.y += p.y;
    com.z += p.z;
  }
  const double n = 5000.0;
  const double norm =
      std::sqrt(com.x * com.x + com.y * com.y + com.z * com.z) / n;
  CHECK(norm < 1e-9);  // within one lattice spacing
}

TEST_CASE("unimolecular probabilities follow the two-channel split") {
  const SystemConfig cfg = make_preset("system1").cfg;
  SimState s(cfg, 1);
  // k_-1 / (k_-1 + k_2) * (1 - exp(-dt (k_-1 + k_2))) at the Table 1 rates.
  CHECK(s.p_unbind() == doctest::Approx(3.92568737e-3).epsilon(1e-8));
  CHECK(s.p_degrade() == doctest::Approx(3.92568737e-1).epsilon(1e-8));
  CHECK(s.p_unbind() + s.p_degrade() <= 1.0);

  const double ksum = cfg.k_minus1 + cfg.k2;
  const double oracle = cfg.k_minus1 / ksum * (1.0 - std::exp(-cfg.dt * ksum));
  CHECK(s.p_unbind() == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("pure diffusion reproduces the displacement variance") {
  const SystemConfig cfg = inert_config(10000);
  SimState s(cfg, 91);
  s.emit();
  std::vector<Vec3> start(s.a_positions().begin(), s.a_positions().end());
  const int steps = 50;
  for (int i = 0; i < steps; ++i) s.step();
  REQUIRE(s.a_positions().size() == start.size());
  double sumsq = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    const Vec3& a = s.a_positions()[i];
    const Vec3& b = start[i];
    sumsq += (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
             (a.z - b.z) * (a.z - b.z);
  }
  const double var = sumsq / (3.0 * static_cast<double>(start.size()));
  const double expected = 2.0 * cfg.d_a() * steps * cfg.dt;
  CHECK(std::fabs(var - expected) / expected < 0.05);
}

TEST_CASE("coincident enzyme and substrate bind within one step") {
  // Time step small enough that the one-step spread is far below r_B.
  const char* text =
      "v_enz_um3 = 0.027\nn_emit = 1\nn_enzyme = 1\nk1 = 1e-12\nk_minus1 = 0\nk2 = 0\n"
      "r0_nm = 90\nrob_nm = 20\nrA_nm = 0.5\nrE_nm = 2.5\nrEA_nm = 3\ndt_us = 1e-6\n";
  const LoadedConfig loaded = parse_config_text(text);
  CHECK(!loaded.warnings.empty());  // outside the binding-radius regime, by design
  SimState s(loaded.cfg, 5);
  s.clear_particles();
  s.add_a({0, 0, 0});
  s.add_e({0, 0, 0});
  s.step();
  const SimCounts c = s.counts();
  CHECK(c.n_ea == 1);
  CHECK(c.n_a_free == 0);
  CHECK(c.n_e == 0);
  REQUIRE(s.ea_positions().size() == 1);
  const Vec3 p = s.ea_positions()[0];
  CHECK(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z) < 1e-9);
}

TEST_CASE("world invariants hold step by step") {
  const SystemConfig cfg = small_config(300, 2000);
  SimState s(cfg, 17);
  const double half = 0.5 * cfg.v_enz_side;
  std::int64_t prev_degraded = 0;
  s.emit();
  for (int k = 0; k < 150; ++k) {
    if (k == 60) s.emit();
    s.step();
    const SimCounts c = s.counts();
    CHECK(c.n_e + c.n_ea == cfg.n_enzyme);
    CHECK(c.n_a_free + c.n_ea + c.n_a_degraded == s.total_emitted());
    CHECK(c.n_a_degraded >= prev_degraded);
    prev_degraded = c.n_a_degraded;
    for (const Vec3& p : s.e_positions()) CHECK(inside_cube(p, half));
    for (const Vec3& p : s.ea_positions()) CHECK(inside_cube(p, half));
  }
  CHECK(prev_degraded > 0);  // the reaction actually ran
}

TEST_CASE("boundary intermediates decompose with the channel odds") {
  // k2 = 0: a forced decomposition at the wall can only unbind.
  SystemConfig cfg = small_config(0, 0);
  cfg.k2 = 0.0;
  SimState s(cfg, 33);
  s.clear_particles();
  const double half = 0.5 * cfg.v_enz_side;
  const int n = 400;
  for (int i = 0; i < n; ++i)
    s.add_ea({half - 1e-12, (i % 20) * 5e-9 - half, (i / 20) * 5e-9 - half});
  s.step();
  const SimCounts c = s.counts();
  CHECK(c.n_a_degraded == 0);
  CHECK(c.n_ea + c.n_e == n);
  CHECK(c.n_e == c.n_a_free);  // every decomposition freed one A and one E
  CHECK(c.n_e > 0);            // about half the wall layer crossed
  for (const Vec3& p : s.e_positions()) CHECK(inside_cube(p, half));
  for (const Vec3& p : s.ea_positions()) CHECK(inside_cube(p, half));

  // No decomposition channel at all: the wall reflects intermediates.
  SystemConfig frozen = small_config(0, 0);
  frozen.k_minus1 = frozen.k2 = 0.0;
  SimState r(frozen, 33);
  r.clear_particles();
  for (int i = 0; i < n; ++i)
    r.add_ea({half - 1e-12, (i % 20) * 5e-9 - half, (i / 20) * 5e-9 - half});
  r.step();
  CHECK(r.counts().n_ea == n);
  for (const Vec3& p : r.ea_positions()) CHECK(inside_cube(p, half));
}

TEST_CASE("observation counts free molecules inside the receiver only") {
  const SystemConfig cfg = small_config(0, 0);
  SimState s(cfg, 3);
  s.clear_particles();
  CHECK(s.observe() == 0);
  s.add_a({cfg.rx_distance, 0, 0});
  CHECK(s.observe() == 1);
  s.add_a({cfg.rx_distance + cfg.rx_radius * 1.01, 0, 0});
  CHECK(s.observe() == 1);
  s.clear_particles();
  s.add_ea({cfg.rx_distance, 0, 0});
  CHECK(s.observe() == 0);
}

TEST_CASE("trials are deterministic in the seed") {
  const SystemConfig cfg = small_config(200, 500);
  BitSequence seq{{1, 0, 1}, cfg.bit_interval};
  std::vector<double> schedule;
  for (int k = 10; k <= 180; k += 10) schedule.push_back(k * cfg.dt);

  const ObservationSeries a = run_trial(cfg, seq, schedule, 12345);
  const ObservationSeries b = run_trial(cfg, seq, schedule, 12345);
  REQUIRE(a.counts.size() == b.counts.size());
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    CHECK(a.counts[i] == b.counts[i]);
    CHECK(a.world[i].n_e == b.world[i].n_e);
    CHECK(a.world[i].n_ea == b.world[i].n_ea);
    CHECK(a.world[i].n_a_free == b.world[i].n_a_free);
    CHECK(a.world[i].n_a_degraded == b.world[i].n_a_degraded);
  }

  const ObservationSeries c = run_trial(cfg, seq, schedule, 54321);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.counts.size(); ++i)
    any_diff = any_diff || a.world[i].n_a_degraded != c.world[i].n_a_degraded ||
               a.world[i].n_ea != c.world[i].n_ea;
  CHECK(any_diff);
}

TEST_CASE("an all-zero sequence produces no observations") {
  const SystemConfig cfg = small_config(200, 500);
  BitSequence seq{{0, 0}, cfg.bit_interval};
  std::vector<double> schedule = {10 * cfg.dt, 40 * cfg.dt};
  const ObservationSeries s = run_trial(cfg, seq, schedule, 7);
  for (auto c : s.counts) CHECK(c == 0);
  for (const auto& w : s.world) CHECK(w.n_a_free == 0);
}

TEST_CASE("schedules must sit on the simulation clock") {
  const SystemConfig cfg = small_config(10, 0);
  BitSequence seq{{1}, cfg.bit_interval};
  const std::vector<double> bad = {0.75 * cfg.dt};
  CHECK_THROWS_AS(run_trial(cfg, seq, bad, 1), ConfigError);
  const std::vector<double> unsorted = {20 * cfg.dt, 10 * cfg.dt};
  CHECK_THROWS_AS(run_trial(cfg, seq, unsorted, 1), ConfigError);
  BitSequence misaligned{{1, 1}, 1.3 * cfg.dt};
  const std::vector<double> ok = {10 * cfg.dt};
  CHECK_THROWS_AS(run_trial(cfg, misaligned, ok, 1), ConfigError);
  BitSequence empty{{}, cfg.bit_interval};
  CHECK_THROWS_AS(run_trial(cfg, empty, ok, 1), ConfigError);
}

TEST_CASE("per-trial csv format") {
  const SystemConfig cfg = small_config(50, 100);
  BitSequence seq{{1}, cfg.bit_interval};
  const std::vector<double> schedule = {10 * cfg.dt, 20 * cfg.dt};
  const ObservationSeries s = run_trial(cfg, seq, schedule, 5);
  std::ostringstream out;
  write_trial_csv_header(out);
  write_trial_csv_rows(out, 3, s);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "trial_id,t_us,n_obs_free_A,n_E,n_EA,n_A_alive,n_A_degraded");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind("3,", 0) == 0);
    int commas = 0;
    for (char ch : line) commas += ch == ',';
    CHECK(commas == 6);
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("intermediate diffusion coefficient switch") {
  SystemConfig cfg = small_config(100, 300);
  cfg.k_minus1 = cfg.k2 = 0.0;  // keep the intermediate alive for the step
  // Same seed: the worlds diverge only through the EA diffusion scale.
  SimState a(cfg, 8, SimOptions{false});
  SimState b(cfg, 8, SimOptions{true});
  a.clear_particles();
  b.clear_particles();
  a.add_ea({0, 0, 0});
  b.add_ea({0, 0, 0});
  a.step();
  b.step();
  REQUIRE(a.ea_positions().size() == 1);
  REQUIRE(b.ea_positions().size() == 1);
  const Vec3 pa = a.ea_positions()[0];
  const Vec3 pb = b.ea_positions()[0];
  // Identical draws, scaled by sqrt(D_EA) vs sqrt(D_A).
  const double scale = std::sqrt(cfg.d_a() / cfg.d_ea());
  CHECK(pb.x == doctest::Approx(pa.x * scale).epsilon(1e-12));
  CHECK(pb.y == doctest::Approx(pa.y * scale).epsilon(1e-12));
  CHECK(pb.z == doctest::Approx(pa.z * scale).epsilon(1e-12));
}
