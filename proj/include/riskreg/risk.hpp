#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "riskreg/grid.hpp"
#include "riskreg/tikhonov.hpp"

namespace riskreg {

enum class CurveKind { predictive, lower_bound, upre, gcv, lcurve };

const char* to_string(CurveKind kind);

/// Sampled objective along a grid. For the L-curve, `values` holds
/// log ||f_alpha|| and `extra` holds log ||r_alpha||.
struct RiskCurve {
  std::vector<double> alphas;
  std::vector<double> values;
  std::vector<double> extra;
  CurveKind kind = CurveKind::predictive;
};

/// CSV with header `alpha,value,kind` (L-curves add a `log_residual` column).
void write_csv(std::ostream& out, const RiskCurve& curve);

/// E||X_alpha g^eta - g_true||^2 evaluated exactly in the singular basis.
double predictive_risk(const SpectralDecomposition& dec, const Vector& g_true, double sigma2,
                       double alpha);
double predictive_risk(const SpectralDecomposition& dec, const SpectralData& g_true,
                       double sigma2, double alpha);
/// d/dalpha of predictive_risk.
double predictive_risk_derivative(const SpectralDecomposition& dec, const SpectralData& g_true,
                                  double sigma2, double alpha);

/// T = rho^2 * s_n(X_alpha - I)^2 + sigma^2 * ||X_alpha||_F^2.
double lower_bound_T(double rho2, double sigma2, const InfluenceQuantities& q);
double lower_bound_T(double rho2, double sigma2, const SpectralDecomposition& dec, double alpha);

/// T_h = f_1 + h f_2, i.e. lower_bound_T / rho^2 with h = sigma^2 / rho^2.
double T_h(const SpectralDecomposition& dec, double h, double alpha);
double T_h_derivative(const SpectralDecomposition& dec, double h, double alpha);
double T_h_second_derivative(const SpectralDecomposition& dec, double h, double alpha);

struct MinimizerResult {
  double alpha_star = 0.0;
  double objective = 0.0;
  double lo = 0.0;  // final bracket
  double hi = 0.0;
  int iterations = 0;
  bool converged = false;
  bool boundary = false;  // T_h' <= 0 at s_1^2 / 2, so alpha_star >= s_1^2 / 2
};

/// Minimizes T_h over [0, s_1^2 / 2] with Newton steps safeguarded by the
/// sign-change bracket of T_h'. When T_h is still decreasing at s_1^2 / 2 the
/// bracket is extended to the right and the first stationary point returned.
MinimizerResult minimize_T(const SpectralDecomposition& dec, double h);

struct AlphaBounds {
  double lo = 0.0;
  std::optional<double> hi;  // only when h < zeta = s_1^2 / tr(A^T A)
};

AlphaBounds alpha_bounds(const SpectralDecomposition& dec, double h);

/// True iff h <= 1 / (27 r): the interval minimizer is then the global one.
bool global_minimizer_certificate(const SpectralDecomposition& dec, double h);

/// s_1^(4/3) * s_r^(2/3).
double upper_bound_threshold(const SpectralDecomposition& dec);

/// Grid index minimizing rho^2 sn_sq + sigma^2 frob_sq; ties go to the largest alpha.
std::size_t argmin_T_on_grid(std::span<const InfluenceQuantities> curve, double rho2,
                             double sigma2);

}  // namespace riskreg
