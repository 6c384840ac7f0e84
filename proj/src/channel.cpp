#include "enzchan/channel.hpp"

#include <cmath>

namespace enzchan {

ChannelModel make_channel_model(const SystemConfig& cfg, bool enzymes_active) {
  ChannelModel m;
  m.cfg = cfg;
  m.enzymes_active = enzymes_active;
  m.c_etot = enzymes_active ? cfg.c_etot : 0.0;
  m.t_max = peak_time(m);
  m.n_max = expected_observed(m.t_max, m);
  return m;
}

double impulse_concentration(double r, double t, const ChannelModel& model) {
  if (!(t > 0.0)) throw std::domain_error("impulse_concentration: t must be > 0");
  const double d = model.cfg.d_a();
  const double spread = 4.0 * kPi * d * t;
  const double exponent = -model.cfg.k1 * model.c_etot * t - r * r / (4.0 * d * t);
  return static_cast<double>(model.cfg.n_emit) / (spread * std::sqrt(spread)) *
         std::exp(exponent);
}

double expected_observed(double t, const ChannelModel& model) {
  return impulse_concentration(model.cfg.rx_distance, t, model) * model.cfg.v_ob;
}

double peak_time(const ChannelModel& model) {
  const double d = model.cfg.d_a();
  const double r0 = model.cfg.rx_distance;
  const double kc = model.cfg.k1 * model.c_etot;
  if (!model.enzymes_active || kc == 0.0) return r0 * r0 / (6.0 * d);
  return (-3.0 + std::sqrt(9.0 + 4.0 * kc * r0 * r0 / d)) / (4.0 * kc);
}

double sampling_time(const ChannelModel& model) {
  if (model.cfg.dt <= 0.0) return model.t_max;
  return std::round(model.t_max / model.cfg.dt) * model.cfg.dt;
}

double decay_time(const ChannelModel& model, const DecayQuery& query) {
  if (!(query.alpha > 0.0 && query.alpha < 1.0))
    throw std::domain_error("decay_time: alpha must be in (0,1)");

  if (query.method == DecayMethod::NumericScan) {
    constexpr double kDelta = 1e-3;
    double t = model.t_max;
    for (long n = 1; expected_observed(t, model) / model.n_max > query.alpha; ++n)
      t = model.t_max * (1.0 + static_cast<double>(n) * kDelta);
    return t;
  }

  const double d = model.cfg.d_a();
  const double r0 = model.cfg.rx_distance;
  const double kc = model.cfg.k1 * model.c_etot;
  // Exponential term bounded by its maximum, exp(-|r0| sqrt(k1 C / D_A)),
  // attained at t = |r0| / sqrt(4 k1 C D_A); 1 when enzymes are inactive.
  const double exp_factor =
      (model.enzymes_active && kc > 0.0)
          ? std::exp(-(2.0 / 3.0) * r0 * std::sqrt(kc / d))
          : 1.0;
  const double ratio =
      model.cfg.v_ob * static_cast<double>(model.cfg.n_emit) / (query.alpha * model.n_max);
  return std::cbrt(ratio * ratio) * exp_factor / (4.0 * kPi * d);
}

}  // namespace enzchan
