#include "enzchan/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "enzchan/rng.hpp"

namespace enzchan {

namespace {

// Continued fraction for I_x(a,b) (modified Lentz). Converges in a few
// dozen iterations for the a, b used here; relative tolerance 1e-14.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("regularized_incomplete_beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("regularized_incomplete_beta: x must be in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Symmetric-argument switch keeps the continued fraction well conditioned.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

ObservationProb observation_probability(double t, const ChannelModel& model) {
  const double raw = expected_observed(t, model) / static_cast<double>(model.cfg.n_emit);
  return ObservationProb{t, std::clamp(raw, 0.0, 1.0)};
}

namespace {

double binomial_tail(std::int64_t n, double p, std::int64_t xi) {
  if (xi <= 0) return 1.0;
  if (xi > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return regularized_incomplete_beta(static_cast<double>(xi),
                                     static_cast<double>(n - xi + 1), p);
}

double poisson_tail(double mu, std::int64_t xi) {
  if (xi <= 0) return 1.0;
  if (mu <= 0.0) return 0.0;
  double sum = 0.0;
  double term = 1.0;  // mu^w / w!
  for (std::int64_t w = 0; w < xi; ++w) {
    if (w > 0) term *= mu / static_cast<double>(w);
    sum += term;
  }
  return 1.0 - std::exp(-mu) * sum;
}

double gaussian_tail(double mu, double p_single, std::int64_t xi) {
  if (xi <= 0) return 1.0;
  if (mu <= 0.0) return 0.0;  // degenerate at zero
  const double var = mu * (1.0 - p_single);
  if (var <= 0.0) return static_cast<double>(xi) <= mu ? 1.0 : 0.0;
  const double z = (static_cast<double>(xi) - mu) / std::sqrt(2.0 * var);
  return 0.5 * (1.0 - std::erf(z));
}

}  // namespace

double count_tail(const CountModel& model, std::int64_t xi) {
  if (xi < 0) throw std::domain_error("count_tail: xi must be >= 0");
  switch (model.family) {
    case CountFamily::Binomial:
      return binomial_tail(model.n_trials, model.p_single, xi);
    case CountFamily::Poisson:
      return poisson_tail(model.mean, xi);
    case CountFamily::Gaussian:
      return gaussian_tail(model.mean, model.p_single, xi);
  }
  return 0.0;
}

double count_pmf(const CountModel& model, std::int64_t w) {
  if (w < 0) throw std::domain_error("count_pmf: w must be >= 0");
  switch (model.family) {
    case CountFamily::Binomial:
      // Difference of the two incomplete-beta tails.
      return count_tail(model, w) - count_tail(model, w + 1);
    case CountFamily::Poisson: {
      if (model.mean <= 0.0) return w == 0 ? 1.0 : 0.0;
      double term = std::exp(-model.mean);
      for (std::int64_t i = 1; i <= w; ++i) term *= model.mean / static_cast<double>(i);
      return term;
    }
    case CountFamily::Gaussian: {
      if (model.mean <= 0.0) return w == 0 ? 1.0 : 0.0;
      const double var = model.mean * (1.0 - model.p_single);
      if (var <= 0.0) return 0.0;
      const double d = static_cast<double>(w) - model.mean;
      return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
    }
  }
  return 0.0;
}

namespace {

double decision_instant(const ChannelModel& model, SamplingTime sampling) {
  return sampling == SamplingTime::Exact ? model.t_max : sampling_time(model);
}

void check_bit_index(std::size_t j, const BitSequence& seq) {
  if (seq.bits.empty()) throw std::invalid_argument("bit sequence must be nonempty");
  if (j < 1 || j > seq.bits.size())
    throw std::invalid_argument("bit index out of range");
}

std::size_t isi_window_start(std::size_t j, IsiMode isi) {
  switch (isi) {
    case IsiMode::None: return j;
    case IsiMode::PreviousOnly: return j > 1 ? j - 1 : 1;
    case IsiMode::Full: return 1;
  }
  return j;
}

}  // namespace

double isi_mean(std::size_t j, const BitSequence& seq, const ChannelModel& model,
                IsiMode isi, SamplingTime sampling) {
  check_bit_index(j, seq);
  const double ts = decision_instant(model, sampling);
  const double tb = seq.bit_interval;
  double mean = 0.0;
  for (std::size_t i = isi_window_start(j, isi); i <= j; ++i) {
    if (!seq.bits[i - 1]) continue;
    const double t = static_cast<double>(j - i) * tb + ts;
    mean += observation_probability(t, model).p_ob;
  }
  return static_cast<double>(model.cfg.n_emit) * mean;
}

namespace {

// Tail of the count at decision instant j for a concrete sequence. The
// Binomial family has no simple sum across intervals with different
// per-molecule probabilities, so it is restricted to windows holding at
// most one emission; Poisson and Gaussian are mean-matched.
double sequence_tail(std::size_t j, const BitSequence& seq, const ChannelModel& model,
                     std::int64_t xi, CountFamily family, IsiMode isi,
                     SamplingTime sampling) {
  const double ts = decision_instant(model, sampling);
  const double tb = seq.bit_interval;

  if (family == CountFamily::Binomial) {
    int emissions = 0;
    double p = 0.0;
    for (std::size_t i = isi_window_start(j, isi); i <= j; ++i) {
      if (!seq.bits[i - 1]) continue;
      ++emissions;
      p = observation_probability(static_cast<double>(j - i) * tb + ts, model).p_ob;
    }
    if (emissions > 1)
      throw std::invalid_argument(
          "Binomial family supports at most one emission in the ISI window; "
          "use Poisson or Gaussian for full ISI");
    if (emissions == 0) return xi <= 0 ? 1.0 : 0.0;
    return count_tail({CountFamily::Binomial, model.cfg.n_emit, 0.0, p}, xi);
  }

  const double mean = isi_mean(j, seq, model, isi, sampling);
  const double p_now = observation_probability(ts, model).p_ob;
  return count_tail({family, 0, mean, p_now}, xi);
}

}  // namespace

double bit_error_prob(std::size_t j, const BitSequence& seq, const ChannelModel& model,
                      std::int64_t xi, CountFamily family, IsiMode isi,
                      SamplingTime sampling) {
  check_bit_index(j, seq);
  const double tail = sequence_tail(j, seq, model, xi, family, isi, sampling);
  return seq.bits[j - 1] ? 1.0 - tail : tail;
}

ErrorReport mean_error_prob(const ChannelModel& model, double bit_interval,
                            std::int64_t xi, CountFamily family, IsiMode isi,
                            int n_bits, int n_sequences, double p1,
                            std::uint64_t rng_seed, int n_threads,
                            SamplingTime sampling) {
  if (n_bits < 1 || n_sequences < 1)
    throw std::invalid_argument("mean_error_prob: n_bits and n_sequences must be >= 1");
  if (!(p1 >= 0.0 && p1 <= 1.0))
    throw std::invalid_argument("mean_error_prob: p1 must be in [0,1]");
  if (family == CountFamily::Binomial && isi != IsiMode::None)
    throw std::invalid_argument(
        "mean_error_prob: Binomial family is limited to isi = None");

  const std::size_t nb = static_cast<std::size_t>(n_bits);
  const std::size_t ns = static_cast<std::size_t>(n_sequences);
  // Pe[j] for each (sequence, bit); filled independently per sequence so
  // the reduction below is identical for any worker count.
  std::vector<double> pe(ns * nb, 0.0);

  auto run_sequence = [&](std::size_t s) {
    Xoshiro256pp rng(derive_seed(rng_seed, s));
    BitSequence seq;
    seq.bit_interval = bit_interval;
    seq.bits.resize(nb);
    for (auto& b : seq.bits) b = rng.uniform() < p1 ? 1 : 0;
    for (std::size_t j = 1; j <= nb; ++j) {
      const std::uint8_t drawn = seq.bits[j - 1];
      seq.bits[j - 1] = 1;
      const double miss = 1.0 - sequence_tail(j, seq, model, xi, family, isi, sampling);
      seq.bits[j - 1] = 0;
      const double alarm = sequence_tail(j, seq, model, xi, family, isi, sampling);
      pe[s * nb + (j - 1)] = p1 * miss + (1.0 - p1) * alarm;
      // The drawn bit stays in place as the prefix for positions after j.
      seq.bits[j - 1] = drawn;
    }
  };

  const int workers = std::max(1, std::min<int>(n_threads, n_sequences));
  if (workers == 1) {
    for (std::size_t s = 0; s < ns; ++s) run_sequence(s);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = static_cast<std::size_t>(w); s < ns;
             s += static_cast<std::size_t>(workers))
          run_sequence(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  ErrorReport report;
  report.threshold = xi;
  report.isi_mode = isi;
  report.per_bit.assign(nb, 0.0);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t j = 0; j < nb; ++j) report.per_bit[j] += pe[s * nb + j];
  double total = 0.0;
  for (auto& v : report.per_bit) {
    v /= static_cast<double>(ns);
    total += v;
  }
  report.mean_error = total / static_cast<double>(nb);
  return report;
}

}  // namespace enzchan
