#pragma once

#include <cstddef>
#include <vector>

namespace riskreg {

/// Log-equispaced regularization parameters, strictly increasing.
struct AlphaGrid {
  double min = 0.0;
  double max = 0.0;
  std::vector<double> values;

  static AlphaGrid logspace(double min, double max, int points);

  /// [1e-12 s_1^2, s_1^2 / 2] with 200 points.
  static AlphaGrid default_small_scale(double s1_sq);
  /// (1e-8, 1e-2) * s_1^2 / 2 with 100 points.
  static AlphaGrid default_large_scale(double s1_sq);

  std::size_t size() const noexcept { return values.size(); }
  double ratio() const;
  /// Index of the log-scale midpoint (lower middle for even sizes).
  std::size_t midpoint() const noexcept { return values.empty() ? 0 : (values.size() - 1) / 2; }
  /// Index of the grid value nearest to alpha in log scale.
  std::size_t nearest(double alpha) const;
};

}  // namespace riskreg
