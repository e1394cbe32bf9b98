#include "mfucrl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "mfucrl/error.hpp"
#include "mfucrl/seeds.hpp"

namespace mfucrl {

namespace {

// Kernel values below exp(-kCutoff^2 / 2) of the peak are skipped.
constexpr double kCutoff = 10.0;
constexpr int kLanes = 8;

// dst[dir * k] += scale * step^k * table[k] for k = 1..count, in blocks of
// kLanes independent power chains.
void accumulate_tail(double* dst, int dir, double scale, double step, int count, const double* table) {
  double pow[kLanes];
  double p = scale;
  for (int l = 0; l < kLanes; ++l) {
    p *= step;
    pow[l] = p;
  }
  double stride = 1.0;
  for (int l = 0; l < kLanes; ++l) stride *= step;
  int k = 1;
  if (dir > 0) {
    for (; k + kLanes - 1 <= count; k += kLanes) {
      for (int l = 0; l < kLanes; ++l) {
        dst[k + l] += pow[l] * table[k + l];
        pow[l] *= stride;
      }
    }
    for (int l = 0; k <= count; ++k, ++l) dst[k] += pow[l] * table[k];
  } else {
    for (; k + kLanes - 1 <= count; k += kLanes) {
      for (int l = 0; l < kLanes; ++l) {
        dst[-(k + l)] += pow[l] * table[k + l];
        pow[l] *= stride;
      }
    }
    for (int l = 0; k <= count; ++k, ++l) dst[-k] += pow[l] * table[k];
  }
}

}  // namespace

PolicyFn clamped(PolicyFn policy, double lo, double hi) {
  return [policy = std::move(policy), lo, hi](double s, const GridDistribution& mu) {
    return std::clamp(policy(s, mu), lo, hi);
  };
}

PolicyFn constant_policy(double action) {
  return [action](double, const GridDistribution&) { return action; };
}

GridDistribution propagate(const GridDistribution& mu, std::span<const double> drifts, double noise_std,
                           const FlowOptions& options) {
  const int m = mu.size();
  if (static_cast<int>(drifts.size()) != m) throw DynamicsError("drift vector does not match grid size");
  if (!(noise_std > 0.0)) throw DynamicsError("noise_std must be positive");

  const double dx = 1.0 / m;
  const double inv_two_var = 1.0 / (2.0 * noise_std * noise_std);
  const double norm = 1.0 / (noise_std * std::sqrt(2.0 * std::numbers::pi) * m);
  const double reach = kCutoff * noise_std;
  const int n_min = options.periodic ? -m : 0;
  const int n_max = options.periodic ? 2 * m - 1 : m - 1;

  // exp(-(k dx)^2 / (2 var)) for every offset the window can reach.
  const int max_offset = std::min(n_max - n_min, static_cast<int>(std::ceil(reach * m)) + 1);
  std::vector<double> table(static_cast<std::size_t>(max_offset) + 1);
  for (int k = 0; k <= max_offset; ++k) table[static_cast<std::size_t>(k)] = std::exp(-(k * dx) * (k * dx) * inv_two_var);

  // Accumulator over the extended grid [-1, 2): index n + m holds point n/m.
  std::vector<double> acc(static_cast<std::size_t>(3 * m), 0.0);
  double* base = acc.data() + m;

  for (int j = 0; j < m; ++j) {
    const double f = drifts[static_cast<std::size_t>(j)];
    if (!std::isfinite(f)) throw DynamicsError("non-finite drift at grid point " + std::to_string(j));
    const double w = mu.height(j) * norm;
    if (w == 0.0) continue;
    const double c = options.periodic ? wrap(f) : f;

    const int lo = std::max(n_min, static_cast<int>(std::ceil((c - reach) * m)));
    const int hi = std::min(n_max, static_cast<int>(std::floor((c + reach) * m)));
    if (lo > hi) continue;
    const int peak = std::clamp(static_cast<int>(std::lround(c * m)), lo, hi);
    // With d0 = peak dx - c, the kernel at peak +- k factors into
    // exp(-d0^2 / 2var) * table[k] * exp(-+ d0 k dx / var).
    const double d0 = peak * dx - c;
    const double scale = w * std::exp(-d0 * d0 * inv_two_var);
    const double step = std::exp(-2.0 * d0 * dx * inv_two_var);
    const double step_down = 1.0 / step;
    const int up = hi - peak;
    const int down = peak - lo;

    base[peak] += scale;
    accumulate_tail(base + peak, +1, scale, step, up, table.data());
    accumulate_tail(base + peak, -1, scale, step_down, down, table.data());
  }

  std::vector<double> next(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    next[k] = acc[k] + acc[k + static_cast<std::size_t>(m)] + acc[k + static_cast<std::size_t>(2 * m)];
  }
  if (options.renormalize) return GridDistribution::from_heights(std::move(next));
  return GridDistribution::unnormalized(std::move(next));
}

GridDistribution flow_step(const GridDistribution& mu, const PolicyFn& policy, const DriftFn& drift,
                           const FlowOptions& options) {
  const int m = mu.size();
  std::vector<double> drifts(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double s = mu.grid_point(j);
    drifts[static_cast<std::size_t>(j)] = drift.mean(s, policy(s, mu), mu);
  }
  return propagate(mu, drifts, drift.noise_std, options);
}

std::vector<GridDistribution> flow_rollout(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                           const DriftFn& drift, const FlowOptions& options) {
  if (profile.empty()) throw DynamicsError("rollout horizon must be at least 1");
  std::vector<GridDistribution> traj;
  traj.reserve(profile.size() + 1);
  traj.push_back(mu0);
  for (const auto& policy : profile) traj.push_back(flow_step(traj.back(), policy, drift, options));
  return traj;
}

std::vector<GridDistribution> particle_rollout(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                               const DriftFn& drift, std::size_t particles, std::uint64_t seed) {
  if (particles == 0) throw DynamicsError("particle count must be at least 1");
  const int m = mu0.size();
  std::vector<double> pos = mu0.sample(particles, derive_seed(seed, {stream::kParticles}));
  std::vector<GridDistribution> hists;
  hists.reserve(profile.size() + 1);
  hists.push_back(empirical_histogram(pos, m));
  for (std::size_t h = 0; h < profile.size(); ++h) {
    const GridDistribution& emp = hists.back();
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const double s = pos[k];
      const double a = profile[h](s, emp);
      const double noise = key_normal(derive_seed(seed, {stream::kParticles, k, h}));
      pos[k] = wrap(drift.mean(s, a, emp) + drift.noise_std * noise);
    }
    hists.push_back(empirical_histogram(pos, m));
  }
  return hists;
}

void write_trajectory_csv(std::ostream& out, std::span<const GridDistribution> trajectory) {
  if (trajectory.empty()) return;
  out << "h";
  for (int i = 1; i <= trajectory.front().size(); ++i) out << ",m_" << i;
  out << '\n' << std::setprecision(17);
  for (std::size_t h = 0; h < trajectory.size(); ++h) {
    out << h;
    for (double v : trajectory[h].heights()) out << ',' << v;
    out << '\n';
  }
}

}  // namespace mfucrl
