#pragma once
// Closed-form expected channel response for an impulse of information
// molecules, with and without enzymes in the environment.
//
// With enzymes the expression
//
//   C_A(r,t) = N_em / (4 pi D_A t)^{3/2} * exp(-k1 C_Etot t - r^2/(4 D_A t))
//
// is a lower bound on the expected concentration: it assumes every enzyme
// is always unbound (fast degradation, negligible unbinding). This module
// treats the bound as the working model; the gap to reality is quantified
// by comparison against the particle simulation. With C_Etot = 0 the same
// expression is the exact free-diffusion impulse response. The underlying
// coupled reaction-diffusion system is not solved numerically here.

#include "enzchan/physchem.hpp"

namespace enzchan {

struct ChannelModel {
  SystemConfig cfg;
  bool enzymes_active = false;
  double c_etot = 0.0;  // molecule/m^3; 0 when enzymes inactive
  double t_max = 0.0;   // s, time of the expected peak
  double n_max = 0.0;   // expected molecules observed at t_max
};

ChannelModel make_channel_model(const SystemConfig& cfg, bool enzymes_active);

// Expected concentration at distance r from the transmitter, time t after
// the impulse. Lower bound when enzymes are active.
double impulse_concentration(double r, double t, const ChannelModel& model);

// Expected molecules counted by the receiver at time t: the concentration
// at the receiver center times V_ob (uniform-concentration assumption).
double expected_observed(double t, const ChannelModel& model);

// Time of the expected peak. Enzymes active:
// (-3 + sqrt(9 + 4 k1 C_Etot |r0|^2 / D_A)) / (4 k1 C_Etot);
// otherwise |r0|^2 / (6 D_A).
double peak_time(const ChannelModel& model);

// t_max rounded to the nearest multiple of dt; the receiver can only
// sample on the simulation clock. Equals t_max when dt = 0.
double sampling_time(const ChannelModel& model);

enum class DecayMethod { NumericScan, ClosedFormBound };

struct DecayQuery {
  double alpha = 0.3;  // fraction of n_max, in (0,1)
  DecayMethod method = DecayMethod::NumericScan;
};

// Time for the expected count to decay to alpha * n_max.
// NumericScan walks the grid t_max * (1 + n * 1e-3) and returns the first
// point at or past the crossing (so it overshoots the continuous crossing
// by at most one grid step). ClosedFormBound replaces the exponential term
// by its maximum over t, which guarantees a result above the true decay
// time and above t_max.
double decay_time(const ChannelModel& model, const DecayQuery& query);

}  // namespace enzchan
