#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "riskreg/grid.hpp"
#include "riskreg/tikhonov.hpp"

namespace riskreg {

/// Influence scalars along a grid. They depend on A only, so one curve is
/// shared by every data vector of a study.
struct InfluenceCurve {
  AlphaGrid grid;
  std::vector<InfluenceQuantities> values;
  double lambda1 = 0.0;  // s_1^2, exact or power-method estimate
  InfluenceSource source = InfluenceSource::exact;
};

InfluenceCurve exact_influence_curve(const SpectralDecomposition& dec, const AlphaGrid& grid);
InfluenceCurve stochastic_influence_curve(const LinearOperator& a, const AlphaGrid& grid,
                                          const StochasticOptions& options);

/// The Tikhonov regularization path of one data vector on a grid: every rule
/// and the oracle read the same solutions.
struct SolutionPath {
  AlphaGrid grid;
  Vector g;
  double data_norm_sq = 0.0;
  Matrix solutions;  // m x K, column k is f_alpha at grid.values[k]
  std::vector<double> residual_norms;
  std::vector<double> solution_norms;
  std::shared_ptr<const InfluenceCurve> influence;
  SolvePath kind = SolvePath::spectral;

  // Spectral path only.
  std::shared_ptr<const SpectralDecomposition> dec;
  SpectralData data;

  // Solution at an arbitrary alpha (exact for the spectral path, a Krylov
  // solve for the iterative one).
  std::function<RegularizedSolution(double)> evaluate;

  Index rows() const noexcept { return g.size(); }
  std::size_t size() const noexcept { return grid.size(); }
  double alpha(std::size_t k) const { return grid.values[k]; }
  /// Residual norm at alpha, read from the grid when alpha is a grid value.
  double residual_at(double alpha) const;
};

SolutionPath spectral_path(std::shared_ptr<const SpectralDecomposition> dec, const Vector& g,
                           const AlphaGrid& grid,
                           std::shared_ptr<const InfluenceCurve> influence = nullptr);

/// Path computed by one multi-shift Krylov run over the whole grid.
SolutionPath iterative_path(const LinearOperator& a, const Vector& g, const AlphaGrid& grid,
                            std::shared_ptr<const InfluenceCurve> influence,
                            double solve_tol = 1e-8);

}  // namespace riskreg
