#include "riskreg/grid.hpp"

#include <cmath>

#include "riskreg/error.hpp"

namespace riskreg {

AlphaGrid AlphaGrid::logspace(double min, double max, int points) {
  if (!(min > 0.0) || !(max > min) || points < 2 || !std::isfinite(max)) {
    throw InputError("alpha grid needs 0 < min < max and at least two points");
  }
  AlphaGrid grid;
  grid.min = min;
  grid.max = max;
  grid.values.resize(static_cast<std::size_t>(points));
  const double lmin = std::log(min);
  const double step = (std::log(max) - lmin) / (points - 1);
  for (int i = 0; i < points; ++i) grid.values[static_cast<std::size_t>(i)] = std::exp(lmin + step * i);
  grid.values.front() = min;
  grid.values.back() = max;
  return grid;
}

AlphaGrid AlphaGrid::default_small_scale(double s1_sq) {
  return logspace(1e-12 * s1_sq, 0.5 * s1_sq, 200);
}

AlphaGrid AlphaGrid::default_large_scale(double s1_sq) {
  return logspace(1e-8 * s1_sq / 2.0, 1e-2 * s1_sq / 2.0, 100);
}

double AlphaGrid::ratio() const {
  if (values.size() < 2) return 1.0;
  return std::pow(max / min, 1.0 / static_cast<double>(values.size() - 1));
}

std::size_t AlphaGrid::nearest(double alpha) const {
  std::size_t best = 0;
  double best_dist = INFINITY;
  const double la = std::log(alpha);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = std::abs(std::log(values[i]) - la);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

}  // namespace riskreg
