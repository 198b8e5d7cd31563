#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riskreg/path.hpp"
#include "riskreg/risk.hpp"

namespace riskreg {

enum class Rule { pro, ipro, dp, upre, bp, gcv, lc, qoc };

const char* to_string(Rule rule);
/// Throws InputError for unknown names.
Rule rule_from_string(std::string_view name);
/// Rules that need the noise level.
bool needs_sigma(Rule rule);

struct RuleSelection {
  Rule rule = Rule::pro;
  double alpha = 0.0;
  int grid_index = -1;  // set when alpha is a grid value
  int iterations = 0;
  std::optional<double> rho2_hat;
  std::optional<double> sigma2_hat;
  std::optional<double> xi_hat;
  std::vector<double> iterates;  // I-PRO: alpha_0, alpha_1, ...
  std::vector<double> h_trail;   // I-PRO: sigma_k^2 / rho_k^2 per step
  std::vector<double> objective; // objective sampled on the grid, when scanned
  std::vector<std::uint8_t> admissible;  // BP: admissibility on its subgrid
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const;
};

/// JSON object with rule, alpha, xi_hat, rho2_hat, sigma2_hat, iterations,
/// flags, and the I-PRO trail when present.
std::string to_json(const RuleSelection& selection);

/// 10 log10(rho^2 / (n sigma^2)).
double snr_db(double rho2, double sigma2, Index n);

/// ||g||^2 - n sigma^2, unbiased for ||g_true||^2.
double estimate_rho2(const Vector& g, double sigma2);

/// PRO with known (rho^2, sigma^2) on the exact spectrum.
RuleSelection pro(const SpectralDecomposition& dec, double rho2, double sigma2);
/// PRO on a path: continuous minimization when the path is spectral, grid
/// minimization of the sampled lower bound otherwise.
RuleSelection pro(const SolutionPath& path, double rho2, double sigma2);

/// PRO with rho^2 replaced by its unbiased estimate. Throws DegenerateError
/// when the estimate is not positive unless `fallback_to_max` is set, in
/// which case the largest grid alpha is returned and flagged.
RuleSelection pro_estimated(const SolutionPath& path, double sigma2, bool fallback_to_max = false);

struct IproOptions {
  std::optional<double> alpha_init;  // default: log-scale grid midpoint
  double eps = 1e-16;
  double abs_floor = 1e-30;
  int max_iter = 100;
};

/// Fixed-point iteration alternating residual-based (rho^2, sigma^2)
/// estimates with PRO minimization.
RuleSelection ipro(const SolutionPath& path, const IproOptions& options = {});

/// Discrepancy principle ||A f_alpha - g|| = sqrt(n) sigma.
RuleSelection dp(const SolutionPath& path, double sigma);
RuleSelection upre(const SolutionPath& path, double sigma2);
RuleSelection gcv(const SolutionPath& path);

struct BpOptions {
  double gamma = 0.25;  // ratio between consecutive subgrid values
  double c = 1.5;
};

/// Balancing principle on a geometric subgrid of the path grid.
RuleSelection bp(const SolutionPath& path, double sigma, const BpOptions& options = {});
/// Maximum curvature of (log ||r||, log ||f||).
RuleSelection lc(const SolutionPath& path);
/// Minimum of ||f_{alpha_{i+1}} - f_{alpha_i}||.
RuleSelection qoc(const SolutionPath& path);

struct RuleParams {
  std::optional<double> sigma;
  std::optional<double> rho2;  // pro only; estimated from the data when absent
  bool pro_fallback = false;
  BpOptions bp;
  IproOptions ipro;
};

/// Dispatches to the rule. Throws InputError when a required parameter is missing.
RuleSelection select(Rule rule, const SolutionPath& path, const RuleParams& params);

}  // namespace riskreg
