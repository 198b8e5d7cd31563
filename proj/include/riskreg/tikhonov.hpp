#pragma once

#include <cstdint>

#include "riskreg/linop.hpp"

namespace riskreg {

enum class SolvePath { spectral, iterative };
enum class InfluenceSource { exact, stochastic };

/// f_alpha = argmin ||A f - g||^2 + alpha ||f||^2 and its residual norm.
struct RegularizedSolution {
  double alpha = 0.0;
  Vector f_alpha;
  double residual_norm = 0.0;
  SolvePath path = SolvePath::spectral;
};

/// Scalars of the influence matrix X_alpha = A (A^T A + alpha I)^-1 A^T.
struct InfluenceQuantities {
  double alpha = 0.0;
  double sn_sq = 0.0;    // (alpha / (s_1^2 + alpha))^2
  double frob_sq = 0.0;  // ||X_alpha||_F^2
  double trace = 0.0;    // tr X_alpha
  // tr((A^T A + alpha I)^-2 A^T A): noise propagation into f_alpha per unit variance.
  double propagation_sq = 0.0;
  InfluenceSource source = InfluenceSource::exact;
};

/// Data expressed in the left singular basis: coefficients <g, u_i> plus the
/// norm of the component outside range(A).
struct SpectralData {
  Vector coefficients;
  double out_of_range_sq = 0.0;
  double norm_sq = 0.0;
};

SpectralData project(const SpectralDecomposition& dec, const Vector& g);

/// Residual norm ||A f_alpha - g|| from projected data, without forming f_alpha.
double spectral_residual_norm(const SpectralDecomposition& dec, const SpectralData& data,
                              double alpha);

/// Filter-factor solution; alpha = 0 gives the pseudoinverse solution.
RegularizedSolution solve_spectral(const SpectralDecomposition& dec, const Vector& g,
                                   double alpha);
RegularizedSolution solve_spectral(const SpectralDecomposition& dec, const SpectralData& data,
                                   double alpha);

RegularizedSolution solve_iterative(const LinearOperator& a, const Vector& g, double alpha,
                                    double tol = 1e-8);

/// s_i(X_alpha) = s_i^2 / (s_i^2 + alpha) for i <= r. The rows argument is n.
InfluenceQuantities influence_exact(const SpectralDecomposition& dec, Index rows, double alpha);

struct StochasticOptions {
  int probes = 20;
  std::uint64_t seed = 0;
  double solve_tol = 1e-8;
  double power_tol = 1e-8;
  int power_max_iter = 10000;
  ProbeKind kind = ProbeKind::gaussian;
};

/// sn_sq from the power-method estimate of lambda_1(A^T A); the remaining
/// scalars from Hutchinson estimates.
InfluenceQuantities influence_stochastic(const LinearOperator& a, double alpha,
                                         const StochasticOptions& options);

/// Same as influence_stochastic at every alpha, with one frozen probe set and
/// one eigenvalue estimate shared across the grid.
std::vector<InfluenceQuantities> influence_stochastic_curve(const LinearOperator& a,
                                                            std::span<const double> alphas,
                                                            const StochasticOptions& options);

}  // namespace riskreg
