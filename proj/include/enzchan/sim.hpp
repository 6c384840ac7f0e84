#pragma once
// Particle-based stochastic simulation of the reaction-diffusion system:
// Brownian displacement of every free molecule, bimolecular binding within
// the binding radius, unimolecular unbinding/degradation of intermediates,
// enzyme confinement to the V_enz cube, lattice emissions at the
// transmitter and passive counting at the receiver.
//
// A single trial is strictly sequential and a pure function of
// (config, sequence, seed); concurrency lives one layer up, across trials.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "enzchan/detect.hpp"
#include "enzchan/physchem.hpp"
#include "enzchan/rng.hpp"

namespace enzchan {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct SimOptions {
  // Sensitivity switch: diffuse the intermediate with D_A instead of the
  // Einstein-relation coefficient for its own radius.
  bool ea_diffuses_as_a = false;
};

struct SimCounts {
  std::int64_t n_e = 0;          // free enzymes
  std::int64_t n_ea = 0;         // intermediates
  std::int64_t n_a_free = 0;     // live unbound information molecules
  std::int64_t n_a_degraded = 0; // cumulative degraded
};

class SimState {
 public:
  // Draws the initial uniform enzyme positions from the seed. dt must be
  // positive.
  SimState(const SystemConfig& cfg, std::uint64_t seed, SimOptions opts = {});

  // Places n_emit molecules on a cubic lattice with spacing 2 R_A centered
  // at the transmitter, nearest lattice points first (ties in (x,y,z)
  // lexicographic order).
  void emit();

  // One dt update: displace everything, resolve intermediates at the cube
  // boundary and their unbinding/degradation channels, then bind A-E pairs
  // within the binding radius (nearest pairs first, each molecule used at
  // most once). Reaction products become reactive on the next step.
  void step();

  // Free A molecules whose centers lie within the receiver sphere.
  std::int64_t observe() const;

  SimCounts counts() const;
  std::int64_t clock() const { return clock_; }
  double time() const { return static_cast<double>(clock_) * cfg_.dt; }
  std::int64_t total_emitted() const { return emitted_; }
  const SystemConfig& config() const { return cfg_; }

  double binding_radius() const { return r_b_; }
  double p_unbind() const { return p_unbind_; }
  double p_degrade() const { return p_degrade_; }

  std::span<const Vec3> a_positions() const { return a_; }
  std::span<const Vec3> e_positions() const { return e_; }
  std::span<const Vec3> ea_positions() const { return ea_; }

  // Custom world setup (small scenarios, tests).
  void clear_particles();
  void add_a(Vec3 p) { a_.push_back(p); ++emitted_; }
  void add_e(Vec3 p);
  void add_ea(Vec3 p);

 private:
  void displace_a_and_mark();
  void displace_e_and_sift();
  void displace_and_resolve_ea();
  void bind_pairs();
  double fold(double x) const;

  SystemConfig cfg_;
  SimOptions opts_;
  Xoshiro256pp rng_;
  double half_side_ = 0.0;
  double sigma_a_ = 0.0, sigma_e_ = 0.0, sigma_ea_ = 0.0;
  double r_b_ = 0.0;
  double p_unbind_ = 0.0, p_degrade_ = 0.0;

  std::vector<Vec3> a_, e_, ea_;
  std::vector<Vec3> pending_a_, pending_e_;
  std::int64_t degraded_ = 0;
  std::int64_t emitted_ = 0;
  std::int64_t clock_ = 0;

  std::vector<Vec3> lattice_;  // cached emission offsets

  // Binding search acceleration. A coarse occupancy mask over V_enz marks
  // every cell within r_b reach of a free A; only enzymes landing in
  // marked cells enter the fine cell list that the per-A query walks.
  // Most enzymes are nowhere near an information molecule and skip the
  // list entirely.
  int coarse_n_ = 0;
  double coarse_inv_edge_ = 0.0;
  std::vector<std::uint8_t> a_mask_;
  int fine_n_ = 0;
  double fine_inv_edge_ = 0.0;
  std::vector<std::int32_t> fine_head_;
  std::vector<std::int32_t> fine_next_;
  std::int64_t hot_enzymes_ = 0;
  struct Candidate {
    double d2;
    std::int32_t a, e;
  };
  std::vector<Candidate> candidates_;
  std::vector<std::uint8_t> a_used_, e_used_;
  std::vector<std::int32_t> bound_a_, bound_e_;
};

struct ObservationSeries {
  std::vector<double> sample_times;       // s, multiples of dt
  std::vector<std::int64_t> counts;       // free A inside the receiver
  std::vector<SimCounts> world;           // species census at each sample
};

// Full transmission: enzymes drawn uniformly in V_enz from the seed, one
// lattice emission at the start of every interval whose bit is 1, stepping
// to the last scheduled sample. Sample times must be multiples of dt, as
// must the bit interval.
ObservationSeries run_trial(const SystemConfig& cfg, const BitSequence& seq,
                            std::span<const double> sample_schedule,
                            std::uint64_t seed, SimOptions opts = {});

// One row per sample: trial_id,t_us,n_obs_free_A,n_E,n_EA,n_A_alive,n_A_degraded
void write_trial_csv_header(std::ostream& out);
void write_trial_csv_rows(std::ostream& out, std::int64_t trial_id,
                          const ObservationSeries& series);

}  // namespace enzchan
