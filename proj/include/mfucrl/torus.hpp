#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mfucrl {

/// Maps any real to its representative in [0, 1).
double wrap(double s);

/// Maps a displacement to its shortest signed representative in (-0.5, 0.5].
double wrap_signed(double d);

/// Histogram density on the unit torus over the grid m_i = i / M.
///
/// Heights are density values: bin i (centred at m_i, width 1/M) carries mass
/// heights[i] / M. Normalized distributions satisfy (1/M) * sum(heights) == 1.
/// Values are immutable after construction.
class GridDistribution {
 public:
  static constexpr double kMassTolerance = 1e-9;

  static GridDistribution uniform(int bins);
  /// Samples `density` at the grid points and normalizes. Throws
  /// InvalidDensityError on a negative or non-finite sample.
  static GridDistribution from_density(int bins, const std::function<double(double)>& density);
  /// Takes heights as given and normalizes them.
  static GridDistribution from_heights(std::vector<double> heights);
  /// Keeps the heights exactly as given, without normalization. Used for
  /// inspecting raw flow output.
  static GridDistribution unnormalized(std::vector<double> heights);
  /// All mass in bin `bin`.
  static GridDistribution point_mass(int bins, int bin);

  int size() const noexcept { return static_cast<int>(heights_.size()); }
  std::span<const double> heights() const noexcept { return heights_; }
  double height(int i) const { return heights_[static_cast<std::size_t>(i)]; }
  double grid_point(int i) const noexcept { return static_cast<double>(i) / size(); }

  /// (1/M) * sum(heights).
  double mass() const;

  /// Periodic linear interpolation between neighbouring grid heights.
  double density_at(double s) const;

  /// Shifts every height forward by `bins` grid cells (mod M).
  GridDistribution rotated(int bins) const;

  /// Inverse-CDF draws from the piecewise-constant density. Bin i covers
  /// [m_i - 1/(2M), m_i + 1/(2M)) on the torus. Deterministic in `seed`.
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

  bool operator==(const GridDistribution&) const = default;

 private:
  explicit GridDistribution(std::vector<double> heights) : heights_(std::move(heights)) {}
  static void check_grid(std::size_t bins);

  std::vector<double> heights_;
};

/// Normalized histogram of torus points, binned to the nearest grid point.
GridDistribution empirical_histogram(std::span<const double> points, int bins);

/// Circular Wasserstein-1 distance between two grid distributions of equal
/// size (shift-median CDF formula). Throws GridMismatchError on size mismatch.
double wasserstein1_circle(const GridDistribution& a, const GridDistribution& b);

/// Argument of the first trigonometric moment, mapped to [0, 1).
double circular_mean(const GridDistribution& dist);

}  // namespace mfucrl
