#include "enzchan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace enzchan {

namespace {

// Probability that an intermediate undergoes the reaction with rate k
// within one step, jointly with the competing channel of rate k_other.
double unimolecular_prob(double k, double k_other, double dt) {
  const double ksum = k + k_other;
  if (ksum <= 0.0) return 0.0;
  return k / ksum * (1.0 - std::exp(-dt * ksum));
}

std::vector<Vec3> emission_lattice(std::int64_t n, double spacing) {
  std::vector<Vec3> out;
  if (n <= 0) return out;
  const int m =
      static_cast<int>(std::ceil(std::cbrt(3.0 * static_cast<double>(n) / (4.0 * kPi)))) + 2;
  struct Node {
    std::int64_t d2;
    int i, j, k;
  };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(2 * m + 1) * (2 * m + 1) * (2 * m + 1));
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      for (int k = -m; k <= m; ++k)
        nodes.push_back({static_cast<std::int64_t>(i) * i +
                             static_cast<std::int64_t>(j) * j +
                             static_cast<std::int64_t>(k) * k,
                         i, j, k});
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t c = 0; c < n; ++c) {
    const Node& nd = nodes[static_cast<std::size_t>(c)];
    out.push_back({nd.i * spacing, nd.j * spacing, nd.k * spacing});
  }
  return out;
}

}  // namespace

SimState::SimState(const SystemConfig& cfg, std::uint64_t seed, SimOptions opts)
    : cfg_(cfg), opts_(opts), rng_(seed) {
  if (!(cfg_.dt > 0.0)) throw ConfigError("sim: dt must be > 0");
  half_side_ = 0.5 * cfg_.v_enz_side;
  sigma_a_ = std::sqrt(2.0 * cfg_.d_a() * cfg_.dt);
  sigma_e_ = std::sqrt(2.0 * cfg_.d_e() * cfg_.dt);
  sigma_ea_ = std::sqrt(2.0 * (opts_.ea_diffuses_as_a ? cfg_.d_a() : cfg_.d_ea()) * cfg_.dt);
  r_b_ = enzchan::binding_radius(cfg_).value;
  p_unbind_ = unimolecular_prob(cfg_.k_minus1, cfg_.k2, cfg_.dt);
  p_degrade_ = unimolecular_prob(cfg_.k2, cfg_.k_minus1, cfg_.dt);

  lattice_ = emission_lattice(cfg_.n_emit, 2.0 * cfg_.species_a.radius);

  e_.reserve(static_cast<std::size_t>(cfg_.n_enzyme));
  for (std::int64_t i = 0; i < cfg_.n_enzyme; ++i) {
    e_.push_back({(rng_.uniform() - 0.5) * cfg_.v_enz_side,
                  (rng_.uniform() - 0.5) * cfg_.v_enz_side,
                  (rng_.uniform() - 0.5) * cfg_.v_enz_side});
  }

  if (r_b_ > 0.0 && cfg_.n_enzyme > 0) {
    const double cells_by_radius = cfg_.v_enz_side / r_b_;  // cell edge >= r_b
    coarse_n_ = static_cast<int>(std::max(1.0, std::min(cells_by_radius, 32.0)));
    coarse_inv_edge_ = static_cast<double>(coarse_n_) / cfg_.v_enz_side;
    a_mask_.resize(static_cast<std::size_t>(coarse_n_) * coarse_n_ * coarse_n_);
    const double cells_by_count = std::cbrt(static_cast<double>(cfg_.n_enzyme));
    fine_n_ = static_cast<int>(
        std::max(1.0, std::min({cells_by_radius, cells_by_count, 64.0})));
    fine_inv_edge_ = static_cast<double>(fine_n_) / cfg_.v_enz_side;
    fine_head_.resize(static_cast<std::size_t>(fine_n_) * fine_n_ * fine_n_);
    fine_next_.resize(static_cast<std::size_t>(cfg_.n_enzyme));
  }
}

void SimState::clear_particles() {
  a_.clear();
  e_.clear();
  ea_.clear();
  degraded_ = 0;
  emitted_ = 0;
}

void SimState::add_e(Vec3 p) {
  e_.push_back({fold(p.x), fold(p.y), fold(p.z)});
}

void SimState::add_ea(Vec3 p) {
  ea_.push_back({fold(p.x), fold(p.y), fold(p.z)});
}

void SimState::emit() {
  a_.insert(a_.end(), lattice_.begin(), lattice_.end());
  emitted_ += static_cast<std::int64_t>(lattice_.size());
}

double SimState::fold(double x) const {
  while (x > half_side_ || x < -half_side_) {
    if (x > half_side_)
      x = 2.0 * half_side_ - x;
    else
      x = -2.0 * half_side_ - x;
  }
  return x;
}

void SimState::displace_a_and_mark() {
  const auto& zig = ZigguratNormal::instance();
  const bool track = !a_mask_.empty();
  if (track) std::fill(a_mask_.begin(), a_mask_.end(), 0);
  const int n = coarse_n_;
  const double reach = half_side_ + r_b_;
  auto cell_of = [&](double x) {
    const int c = static_cast<int>((x + half_side_) * coarse_inv_edge_);
    return std::clamp(c, 0, n - 1);
  };
  for (Vec3& p : a_) {
    p.x += sigma_a_ * zig(rng_);
    p.y += sigma_a_ * zig(rng_);
    p.z += sigma_a_ * zig(rng_);
    if (!track || p.x > reach || p.x < -reach || p.y > reach || p.y < -reach ||
        p.z > reach || p.z < -reach)
      continue;
    const int x0 = cell_of(p.x - r_b_), x1 = cell_of(p.x + r_b_);
    const int y0 = cell_of(p.y - r_b_), y1 = cell_of(p.y + r_b_);
    const int z0 = cell_of(p.z - r_b_), z1 = cell_of(p.z + r_b_);
    for (int cx = x0; cx <= x1; ++cx)
      for (int cy = y0; cy <= y1; ++cy)
        for (int cz = z0; cz <= z1; ++cz)
          a_mask_[(static_cast<std::size_t>(cx) * n + cy) * n + cz] = 1;
  }
}

void SimState::displace_e_and_sift() {
  const auto& zig = ZigguratNormal::instance();
  const bool track = !a_mask_.empty() && !a_.empty();
  if (track) {
    std::fill(fine_head_.begin(), fine_head_.end(), -1);
    if (fine_next_.size() < e_.size()) fine_next_.resize(e_.size());
  }
  hot_enzymes_ = 0;
  const int cn = coarse_n_, fn = fine_n_;
  // Folded coordinates sit in [-half, half], so (p + half) * inv_edge is
  // in [0, n] and only the upper edge needs adjusting.
  auto cell_in_box = [](double x, double half, double inv, int n) {
    int c = static_cast<int>((x + half) * inv);
    c -= (c == n);
    return c;
  };
  for (std::size_t i = 0; i < e_.size(); ++i) {
    Vec3& p = e_[i];
    p.x = fold(p.x + sigma_e_ * zig(rng_));
    p.y = fold(p.y + sigma_e_ * zig(rng_));
    p.z = fold(p.z + sigma_e_ * zig(rng_));
    if (!track) continue;
    const std::size_t coarse =
        (static_cast<std::size_t>(cell_in_box(p.x, half_side_, coarse_inv_edge_, cn)) * cn +
         cell_in_box(p.y, half_side_, coarse_inv_edge_, cn)) *
            cn +
        cell_in_box(p.z, half_side_, coarse_inv_edge_, cn);
    if (!a_mask_[coarse]) continue;
    const std::size_t fine =
        (static_cast<std::size_t>(cell_in_box(p.x, half_side_, fine_inv_edge_, fn)) * fn +
         cell_in_box(p.y, half_side_, fine_inv_edge_, fn)) *
            fn +
        cell_in_box(p.z, half_side_, fine_inv_edge_, fn);
    fine_next_[i] = fine_head_[fine];
    fine_head_[fine] = static_cast<std::int32_t>(i);
    ++hot_enzymes_;
  }
}

void SimState::displace_and_resolve_ea() {
  const auto& zig = ZigguratNormal::instance();
  const double p_sum = p_unbind_ + p_degrade_;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < ea_.size(); ++i) {
    Vec3 p = ea_[i];
    p.x += sigma_ea_ * zig(rng_);
    p.y += sigma_ea_ * zig(rng_);
    p.z += sigma_ea_ * zig(rng_);

    const bool outside = p.x > half_side_ || p.x < -half_side_ || p.y > half_side_ ||
                         p.y < -half_side_ || p.z > half_side_ || p.z < -half_side_;
    if (outside) {
      const Vec3 inside{fold(p.x), fold(p.y), fold(p.z)};
      if (p_sum <= 0.0) {
        // No decomposition channel exists; reflect like a free enzyme.
        ea_[keep++] = inside;
        continue;
      }
      // Forced decomposition, unbind:degrade odds kept at k_-1 : k_2. The
      // freed enzyme is reflected back in; a freed A starts at the point
      // where the intermediate met the face.
      if (rng_.uniform() < p_unbind_ / p_sum) {
        const Vec3 contact{std::clamp(p.x, -half_side_, half_side_),
                           std::clamp(p.y, -half_side_, half_side_),
                           std::clamp(p.z, -half_side_, half_side_)};
        pending_a_.push_back(contact);
      } else {
        ++degraded_;
      }
      pending_e_.push_back(inside);
      continue;
    }

    const double u = rng_.uniform();
    if (u < p_unbind_) {
      // Unbinding leaves A and E co-located; they separate by diffusion.
      pending_a_.push_back(p);
      pending_e_.push_back(p);
    } else if (u < p_sum) {
      pending_e_.push_back(p);
      ++degraded_;
    } else {
      ea_[keep++] = p;
    }
  }
  ea_.resize(keep);
}

void SimState::bind_pairs() {
  if (r_b_ <= 0.0 || hot_enzymes_ == 0 || a_.empty()) return;

  const int n = fine_n_;
  auto cell_of = [&](double x) {
    const int c = static_cast<int>((x + half_side_) * fine_inv_edge_);
    return std::clamp(c, 0, n - 1);
  };
  candidates_.clear();
  const double r2 = r_b_ * r_b_;
  const double reach = half_side_ + r_b_;
  for (std::size_t ia = 0; ia < a_.size(); ++ia) {
    const Vec3& pa = a_[ia];
    if (pa.x > reach || pa.x < -reach || pa.y > reach || pa.y < -reach ||
        pa.z > reach || pa.z < -reach)
      continue;
    const int x0 = cell_of(pa.x - r_b_), x1 = cell_of(pa.x + r_b_);
    const int y0 = cell_of(pa.y - r_b_), y1 = cell_of(pa.y + r_b_);
    const int z0 = cell_of(pa.z - r_b_), z1 = cell_of(pa.z + r_b_);
    for (int cx = x0; cx <= x1; ++cx)
      for (int cy = y0; cy <= y1; ++cy)
        for (int cz = z0; cz <= z1; ++cz) {
          std::int32_t ie = fine_head_[(static_cast<std::size_t>(cx) * n + cy) * n + cz];
          for (; ie >= 0; ie = fine_next_[static_cast<std::size_t>(ie)]) {
            const Vec3& pe = e_[static_cast<std::size_t>(ie)];
            const double dx = pa.x - pe.x, dy = pa.y - pe.y, dz = pa.z - pe.z;
            const double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 <= r2)
              candidates_.push_back({d2, static_cast<std::int32_t>(ia), ie});
          }
        }
  }
  if (candidates_.empty()) return;

  // Greedy nearest-pair matching, each molecule consumable once. The
  // used-flag arrays persist across steps; only candidate entries are
  // touched, and they are reset below.
  std::sort(candidates_.begin(), candidates_.end(),
            [](const Candidate& l, const Candidate& r) {
              if (l.d2 != r.d2) return l.d2 < r.d2;
              if (l.a != r.a) return l.a < r.a;
              return l.e < r.e;
            });
  if (a_used_.size() < a_.size()) a_used_.resize(a_.size());
  if (e_used_.size() < e_.size()) e_used_.resize(e_.size());
  bound_a_.clear();
  bound_e_.clear();
  for (const Candidate& c : candidates_) {
    if (a_used_[static_cast<std::size_t>(c.a)] || e_used_[static_cast<std::size_t>(c.e)])
      continue;
    a_used_[static_cast<std::size_t>(c.a)] = 1;
    e_used_[static_cast<std::size_t>(c.e)] = 1;
    bound_a_.push_back(c.a);
    bound_e_.push_back(c.e);
    const Vec3& pa = a_[static_cast<std::size_t>(c.a)];
    const Vec3& pe = e_[static_cast<std::size_t>(c.e)];
    ea_.push_back({std::clamp(0.5 * (pa.x + pe.x), -half_side_, half_side_),
                   std::clamp(0.5 * (pa.y + pe.y), -half_side_, half_side_),
                   std::clamp(0.5 * (pa.z + pe.z), -half_side_, half_side_)});
  }
  for (const Candidate& c : candidates_) {
    a_used_[static_cast<std::size_t>(c.a)] = 0;
    e_used_[static_cast<std::size_t>(c.e)] = 0;
  }
  // Swap-removal of the consumed molecules, highest index first.
  std::sort(bound_a_.rbegin(), bound_a_.rend());
  for (std::int32_t ia : bound_a_) {
    a_[static_cast<std::size_t>(ia)] = a_.back();
    a_.pop_back();
  }
  std::sort(bound_e_.rbegin(), bound_e_.rend());
  for (std::int32_t ie : bound_e_) {
    e_[static_cast<std::size_t>(ie)] = e_.back();
    e_.pop_back();
  }
}

void SimState::step() {
  displace_a_and_mark();
  displace_e_and_sift();
  displace_and_resolve_ea();
  bind_pairs();
  // Products of this step's reactions join the free pools now, so they
  // cannot rebind before diffusing.
  a_.insert(a_.end(), pending_a_.begin(), pending_a_.end());
  e_.insert(e_.end(), pending_e_.begin(), pending_e_.end());
  pending_a_.clear();
  pending_e_.clear();
  ++clock_;
}

std::int64_t SimState::observe() const {
  const double r2 = cfg_.rx_radius * cfg_.rx_radius;
  const double cx = cfg_.rx_distance;
  std::int64_t count = 0;
  for (const Vec3& p : a_) {
    const double dx = p.x - cx;
    const double d2 = dx * dx + p.y * p.y + p.z * p.z;
    if (d2 <= r2) ++count;
  }
  return count;
}

SimCounts SimState::counts() const {
  return {static_cast<std::int64_t>(e_.size()), static_cast<std::int64_t>(ea_.size()),
          static_cast<std::int64_t>(a_.size()), degraded_};
}

ObservationSeries run_trial(const SystemConfig& cfg, const BitSequence& seq,
                            std::span<const double> sample_schedule,
                            std::uint64_t seed, SimOptions opts) {
  if (!(cfg.dt > 0.0)) throw ConfigError("run_trial: dt must be > 0");
  if (seq.bits.empty()) throw ConfigError("run_trial: bit sequence must be nonempty");

  auto to_steps = [&](double t, const char* what) {
    const double ratio = t / cfg.dt;
    const std::int64_t k = static_cast<std::int64_t>(std::llround(ratio));
    if (k < 0 || std::fabs(ratio - static_cast<double>(k)) > 1e-6)
      throw ConfigError(std::string("run_trial: ") + what +
                        " must be a nonnegative multiple of dt");
    return k;
  };

  const std::int64_t tb_steps = to_steps(seq.bit_interval, "bit interval");
  std::vector<std::int64_t> sample_steps;
  sample_steps.reserve(sample_schedule.size());
  for (double t : sample_schedule) sample_steps.push_back(to_steps(t, "sample time"));
  if (!std::is_sorted(sample_steps.begin(), sample_steps.end()))
    throw ConfigError("run_trial: sample times must be nondecreasing");

  ObservationSeries series;
  if (sample_steps.empty()) return series;
  series.sample_times.reserve(sample_steps.size());
  series.counts.reserve(sample_steps.size());
  series.world.reserve(sample_steps.size());

  SimState state(cfg, seed, opts);
  const std::int64_t last = sample_steps.back();
  std::size_t next_sample = 0;
  for (std::int64_t k = 0;; ++k) {
    const std::int64_t interval = tb_steps > 0 ? k / tb_steps : 0;
    if (interval < static_cast<std::int64_t>(seq.bits.size()) &&
        (tb_steps > 0 ? k % tb_steps == 0 : k == 0) &&
        seq.bits[static_cast<std::size_t>(interval)])
      state.emit();
    while (next_sample < sample_steps.size() && sample_steps[next_sample] == k) {
      series.sample_times.push_back(static_cast<double>(k) * cfg.dt);
      series.counts.push_back(state.observe());
      series.world.push_back(state.counts());
      ++next_sample;
    }
    if (k == last) break;
    state.step();
  }
  return series;
}

void write_trial_csv_header(std::ostream& out) {
  out << "trial_id,t_us,n_obs_free_A,n_E,n_EA,n_A_alive,n_A_degraded\n";
}

void write_trial_csv_rows(std::ostream& out, std::int64_t trial_id,
                          const ObservationSeries& series) {
  char buf[64];
  for (std::size_t i = 0; i < series.sample_times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", series.sample_times[i] * 1e6);
    const SimCounts& w = series.world[i];
    out << trial_id << ',' << buf << ',' << series.counts[i] << ',' << w.n_e << ','
        << w.n_ea << ',' << w.n_a_free << ',' << w.n_a_degraded << '\n';
  }
}

}  // namespace enzchan
