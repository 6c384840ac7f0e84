#pragma once
// Receiver statistics: single-molecule observation probability, count
// distributions (binomial exact, Poisson and Gaussian approximations),
// and bit error probabilities with configurable intersymbol-interference
// depth. The receiver samples the count at t_max after the start of each
// bit interval and decides 1 when it is at or above the threshold.

#include <cstdint>
#include <vector>

#include "enzchan/channel.hpp"

namespace enzchan {

enum class CountFamily { Binomial, Poisson, Gaussian };
enum class IsiMode { None, PreviousOnly, Full };

// Exact t_max, or t_max rounded to the simulation clock (used whenever
// analytic values are compared against simulated observations).
enum class SamplingTime { Exact, DtAligned };

struct ObservationProb {
  double t = 0.0;
  double p_ob = 0.0;  // clamped to [0,1]
};

// Probability that one emitted molecule is inside the receiver at time t;
// expected_observed(t) / N_em. Lower bound when enzymes are active.
ObservationProb observation_probability(double t, const ChannelModel& model);

struct CountModel {
  CountFamily family = CountFamily::Poisson;
  std::int64_t n_trials = 0;  // Binomial only
  double mean = 0.0;
  double p_single = 0.0;  // Binomial success prob; Gaussian variance term
};

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Pr(N >= xi). xi = 0 gives 1 for every family.
double count_tail(const CountModel& model, std::int64_t xi);

// Pr(N = w); for the Gaussian family this is the density at w.
double count_pmf(const CountModel& model, std::int64_t w);

struct BitSequence {
  std::vector<std::uint8_t> bits;  // W[1..n], index 0 is the first bit
  double bit_interval = 0.0;       // s
};

// Expected count at the j-th decision instant (j is 1-based):
// N_em * sum_{i in I} W[i] P_ob((j-i) T_B + t_max), where I covers only j
// (None), {j-1, j} (PreviousOnly) or all of 1..j (Full).
double isi_mean(std::size_t j, const BitSequence& seq, const ChannelModel& model,
                IsiMode isi, SamplingTime sampling = SamplingTime::Exact);

// Error probability of bit j conditioned on the given sequence:
// Pr(N < xi) when W[j] = 1, Pr(N >= xi) when W[j] = 0. The count
// distribution is mean-matched to isi_mean. The Binomial family is exact
// only for a single emission, so it is accepted only when at most one
// interval in the ISI window carries a 1.
double bit_error_prob(std::size_t j, const BitSequence& seq, const ChannelModel& model,
                      std::int64_t xi, CountFamily family, IsiMode isi,
                      SamplingTime sampling = SamplingTime::Exact);

struct ErrorReport {
  std::vector<double> per_bit;  // Pe[j]
  double mean_error = 0.0;
  std::int64_t threshold = 0;
  IsiMode isi_mode = IsiMode::Full;
};

// Expected error probability averaged over n_sequences random sequences
// of n_bits with Pr(1) = p1. For each position the drawn prefix is kept
// and the current bit is conditioned on both values, weighted by p1/p0.
// Deterministic for a given seed and bitwise independent of n_threads
// (fixed per-sequence sub-seeds, ordered reduction).
ErrorReport mean_error_prob(const ChannelModel& model, double bit_interval,
                            std::int64_t xi, CountFamily family, IsiMode isi,
                            int n_bits, int n_sequences, double p1,
                            std::uint64_t rng_seed, int n_threads = 1,
                            SamplingTime sampling = SamplingTime::Exact);

}  // namespace enzchan
