#include "riskreg/path.hpp"

#include <algorithm>
#include <cmath>

#include "riskreg/error.hpp"

namespace riskreg {

InfluenceCurve exact_influence_curve(const SpectralDecomposition& dec, const AlphaGrid& grid) {
  InfluenceCurve curve;
  curve.grid = grid;
  curve.lambda1 = dec.largest() * dec.largest();
  curve.source = InfluenceSource::exact;
  curve.values.reserve(grid.size());
  for (double alpha : grid.values) curve.values.push_back(influence_exact(dec, dec.rows, alpha));
  return curve;
}

InfluenceCurve stochastic_influence_curve(const LinearOperator& a, const AlphaGrid& grid,
                                          const StochasticOptions& options) {
  InfluenceCurve curve;
  curve.grid = grid;
  curve.source = InfluenceSource::stochastic;
  curve.values = influence_stochastic_curve(a, grid.values, options);
  if (!curve.values.empty()) {
    // sn_sq = (alpha / (lambda1 + alpha))^2, so lambda1 is recoverable exactly.
    const auto& q = curve.values.front();
    curve.lambda1 = q.alpha / std::sqrt(q.sn_sq) - q.alpha;
  }
  return curve;
}

double SolutionPath::residual_at(double alpha) const {
  const auto it = std::lower_bound(grid.values.begin(), grid.values.end(), alpha);
  if (it != grid.values.end() && *it == alpha) {
    return residual_norms[static_cast<std::size_t>(it - grid.values.begin())];
  }
  return evaluate(alpha).residual_norm;
}

SolutionPath spectral_path(std::shared_ptr<const SpectralDecomposition> dec, const Vector& g,
                           const AlphaGrid& grid, std::shared_ptr<const InfluenceCurve> influence) {
  if (!dec) throw InputError("spectral_path: missing decomposition");
  SolutionPath path;
  path.kind = SolvePath::spectral;
  path.grid = grid;
  path.g = g;
  path.data_norm_sq = g.squaredNorm();
  path.data = project(*dec, g);
  path.dec = dec;
  path.influence = influence ? std::move(influence)
                             : std::make_shared<const InfluenceCurve>(exact_influence_curve(*dec, grid));

  const std::size_t k = grid.size();
  const Index r = dec->rank();
  Matrix filtered(r, static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const double alpha = grid.values[j];
    for (Index i = 0; i < r; ++i) {
      const double s = dec->singular_values[i];
      filtered(i, static_cast<Index>(j)) = s / (s * s + alpha) * path.data.coefficients[i];
    }
  }
  path.solutions = dec->right_vectors * filtered;
  path.residual_norms.resize(k);
  path.solution_norms.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    path.residual_norms[j] = spectral_residual_norm(*dec, path.data, grid.values[j]);
    // right_vectors is orthonormal, so ||f|| = ||filtered coefficients||.
    path.solution_norms[j] = filtered.col(static_cast<Index>(j)).norm();
  }
  const auto* d = dec.get();
  const SpectralData data = path.data;
  path.evaluate = [d, data, keep = dec](double alpha) { return solve_spectral(*d, data, alpha); };
  return path;
}

SolutionPath iterative_path(const LinearOperator& a, const Vector& g, const AlphaGrid& grid,
                            std::shared_ptr<const InfluenceCurve> influence, double solve_tol) {
  if (g.size() != a.rows()) throw InputError("iterative_path: data length mismatch");
  SolutionPath path;
  path.kind = SolvePath::iterative;
  path.grid = grid;
  path.g = g;
  path.data_norm_sq = g.squaredNorm();
  path.influence = std::move(influence);

  const auto xs = shifted_damped_least_squares(a, g, grid.values, KrylovOptions{solve_tol, 0});
  const std::size_t k = grid.size();
  path.solutions.resize(a.cols(), static_cast<Index>(k));
  path.residual_norms.resize(k);
  path.solution_norms.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    path.solutions.col(static_cast<Index>(j)) = xs[j];
    path.residual_norms[j] = (a.apply(xs[j]) - g).norm();
    path.solution_norms[j] = xs[j].norm();
  }
  path.evaluate = [a, g, solve_tol](double alpha) { return solve_iterative(a, g, alpha, solve_tol); };
  return path;
}

}  // namespace riskreg
