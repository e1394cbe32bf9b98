#include "mfucrl/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "mfucrl/error.hpp"

namespace mfucrl {

double wrap(double s) {
  double w = s - std::floor(s);
  // s slightly below an integer can round up to exactly 1.0.
  return w >= 1.0 ? 0.0 : w;
}

double wrap_signed(double d) {
  double w = d - std::ceil(d - 0.5);
  return w <= -0.5 ? w + 1.0 : w;
}

void GridDistribution::check_grid(std::size_t bins) {
  if (bins < 2) throw InvalidGridError("grid needs at least 2 bins, got " + std::to_string(bins));
}

GridDistribution GridDistribution::uniform(int bins) {
  if (bins < 2) throw InvalidGridError("grid needs at least 2 bins, got " + std::to_string(bins));
  return GridDistribution(std::vector<double>(static_cast<std::size_t>(bins), 1.0));
}

GridDistribution GridDistribution::from_density(int bins, const std::function<double(double)>& density) {
  if (bins < 2) throw InvalidGridError("grid needs at least 2 bins, got " + std::to_string(bins));
  std::vector<double> h(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    double v = density(static_cast<double>(i) / bins);
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidDensityError("density is negative or non-finite at grid point " + std::to_string(i));
    h[static_cast<std::size_t>(i)] = v;
  }
  return from_heights(std::move(h));
}

GridDistribution GridDistribution::from_heights(std::vector<double> heights) {
  check_grid(heights.size());
  double total = 0.0;
  for (double v : heights) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDensityError("negative or non-finite height");
    total += v;
  }
  if (!(total > 0.0)) throw InvalidDensityError("distribution has zero mass");
  const double scale = static_cast<double>(heights.size()) / total;
  for (double& v : heights) v *= scale;
  return GridDistribution(std::move(heights));
}

GridDistribution GridDistribution::unnormalized(std::vector<double> heights) {
  check_grid(heights.size());
  return GridDistribution(std::move(heights));
}

GridDistribution GridDistribution::point_mass(int bins, int bin) {
  if (bins < 2) throw InvalidGridError("grid needs at least 2 bins, got " + std::to_string(bins));
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  h[static_cast<std::size_t>(((bin % bins) + bins) % bins)] = static_cast<double>(bins);
  return GridDistribution(std::move(h));
}

double GridDistribution::mass() const {
  return std::accumulate(heights_.begin(), heights_.end(), 0.0) / size();
}

double GridDistribution::density_at(double s) const {
  const int m = size();
  const double x = wrap(s) * m;
  int i = static_cast<int>(std::floor(x));
  const double t = x - i;
  if (i >= m) i -= m;
  const int j = i + 1 == m ? 0 : i + 1;
  return heights_[static_cast<std::size_t>(i)] * (1.0 - t) + heights_[static_cast<std::size_t>(j)] * t;
}

GridDistribution GridDistribution::rotated(int bins) const {
  const int m = size();
  const int shift = ((bins % m) + m) % m;
  std::vector<double> h(heights_.size());
  for (int i = 0; i < m; ++i) h[static_cast<std::size_t>((i + shift) % m)] = heights_[static_cast<std::size_t>(i)];
  return GridDistribution(std::move(h));
}

std::vector<double> GridDistribution::sample(std::size_t n, std::uint64_t seed) const {
  const int m = size();
  std::vector<double> cdf(heights_.size());
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    acc += heights_[static_cast<std::size_t>(i)];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& s : out) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    // Skip empty bins that share the cumulative value.
    while (it != cdf.end() && heights_[static_cast<std::size_t>(it - cdf.begin())] <= 0.0) ++it;
    if (it == cdf.end()) --it;
    const auto i = static_cast<std::size_t>(it - cdf.begin());
    const double lo = i == 0 ? 0.0 : cdf[i - 1];
    const double frac = std::clamp((u - lo) / heights_[i], 0.0, 1.0);
    s = wrap((static_cast<double>(i) - 0.5 + frac) / m);
  }
  return out;
}

GridDistribution empirical_histogram(std::span<const double> points, int bins) {
  if (bins < 2) throw InvalidGridError("grid needs at least 2 bins, got " + std::to_string(bins));
  if (points.empty()) throw InvalidDensityError("empirical histogram of zero points");
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  for (double s : points) {
    int i = static_cast<int>(std::floor(wrap(s) * bins + 0.5));
    if (i >= bins) i -= bins;
    h[static_cast<std::size_t>(i)] += 1.0;
  }
  return GridDistribution::from_heights(std::move(h));
}

double wasserstein1_circle(const GridDistribution& a, const GridDistribution& b) {
  if (a.size() != b.size())
    throw GridMismatchError("grid sizes differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  // Canonical argument order makes the result bitwise symmetric.
  if (std::lexicographical_compare(b.heights().begin(), b.heights().end(), a.heights().begin(), a.heights().end()))
    return wasserstein1_circle(b, a);
  const int m = a.size();
  std::vector<double> diff(static_cast<std::size_t>(m));
  double ca = 0.0, cb = 0.0;
  for (int i = 0; i < m; ++i) {
    ca += a.height(i) / m;
    cb += b.height(i) / m;
    diff[static_cast<std::size_t>(i)] = ca - cb;
  }
  std::vector<double> sorted = diff;
  auto mid = sorted.begin() + m / 2;
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double alpha = *mid;
  double total = 0.0;
  for (double d : diff) total += std::abs(d - alpha);
  return total / m;
}

double circular_mean(const GridDistribution& dist) {
  double c = 0.0, s = 0.0;
  for (int i = 0; i < dist.size(); ++i) {
    const double angle = 2.0 * std::numbers::pi * dist.grid_point(i);
    c += dist.height(i) * std::cos(angle);
    s += dist.height(i) * std::sin(angle);
  }
  return wrap(std::atan2(s, c) / (2.0 * std::numbers::pi));
}

}  // namespace mfucrl
