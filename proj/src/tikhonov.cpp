#include "riskreg/tikhonov.hpp"

#include <cmath>

#include "riskreg/error.hpp"

namespace riskreg {

SpectralData project(const SpectralDecomposition& dec, const Vector& g) {
  if (g.size() != dec.rows) throw InputError("project: data length does not match operator rows");
  SpectralData data;
  data.coefficients = dec.left_vectors.transpose() * g;
  data.out_of_range_sq = (g - dec.left_vectors * data.coefficients).squaredNorm();
  data.norm_sq = g.squaredNorm();
  return data;
}

double spectral_residual_norm(const SpectralDecomposition& dec, const SpectralData& data,
                              double alpha) {
  double sum = data.out_of_range_sq;
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s2 = dec.singular_values[i] * dec.singular_values[i];
    const double damp = alpha / (s2 + alpha);
    sum += damp * damp * data.coefficients[i] * data.coefficients[i];
  }
  return std::sqrt(sum);
}

RegularizedSolution solve_spectral(const SpectralDecomposition& dec, const SpectralData& data,
                                   double alpha) {
  if (!(alpha >= 0.0)) throw InputError("solve_spectral: alpha must be non-negative");
  Vector filtered(dec.rank());
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s = dec.singular_values[i];
    filtered[i] = s / (s * s + alpha) * data.coefficients[i];
  }
  RegularizedSolution out;
  out.alpha = alpha;
  out.f_alpha = dec.right_vectors * filtered;
  out.residual_norm = spectral_residual_norm(dec, data, alpha);
  out.path = SolvePath::spectral;
  return out;
}

RegularizedSolution solve_spectral(const SpectralDecomposition& dec, const Vector& g,
                                   double alpha) {
  return solve_spectral(dec, project(dec, g), alpha);
}

RegularizedSolution solve_iterative(const LinearOperator& a, const Vector& g, double alpha,
                                    double tol) {
  if (!(alpha > 0.0)) throw InputError("solve_iterative: alpha must be positive");
  KrylovResult k = damped_least_squares(a, g, alpha, KrylovOptions{tol, 0});
  RegularizedSolution out;
  out.alpha = alpha;
  out.residual_norm = (a.apply(k.x) - g).norm();
  out.f_alpha = std::move(k.x);
  out.path = SolvePath::iterative;
  return out;
}

InfluenceQuantities influence_exact(const SpectralDecomposition& dec, Index /*rows*/, double alpha) {
  if (!(alpha >= 0.0)) throw InputError("influence_exact: alpha must be non-negative");
  InfluenceQuantities q;
  q.alpha = alpha;
  q.source = InfluenceSource::exact;
  const double s1sq = dec.largest() * dec.largest();
  const double lead = (s1sq + alpha) > 0.0 ? alpha / (s1sq + alpha) : 1.0;
  q.sn_sq = lead * lead;
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s2 = dec.singular_values[i] * dec.singular_values[i];
    const double x = s2 / (s2 + alpha);
    q.trace += x;
    q.frob_sq += x * x;
    q.propagation_sq += s2 / ((s2 + alpha) * (s2 + alpha));
  }
  return q;
}

namespace {

double eigenvalue_for(const LinearOperator& a, const StochasticOptions& options) {
  return power_iteration(a, PowerOptions{options.power_tol, options.power_max_iter, options.seed})
      .eigenvalue;
}

InfluenceQuantities assemble(double alpha, double lambda1, const StochasticInfluence& est) {
  InfluenceQuantities q;
  q.alpha = alpha;
  q.source = InfluenceSource::stochastic;
  const double lead = alpha / (lambda1 + alpha);
  q.sn_sq = lead * lead;
  q.frob_sq = est.frob_sq;
  q.trace = est.trace;
  q.propagation_sq = est.propagation_sq;
  return q;
}

}  // namespace

InfluenceQuantities influence_stochastic(const LinearOperator& a, double alpha,
                                         const StochasticOptions& options) {
  if (!(alpha > 0.0)) throw InputError("influence_stochastic: alpha must be positive");
  const double lambda1 = eigenvalue_for(a, options);
  const auto est = stochastic_influence(
      a, alpha, ProbeOptions{options.probes, options.seed, options.solve_tol, options.kind});
  return assemble(alpha, lambda1, est);
}

std::vector<InfluenceQuantities> influence_stochastic_curve(const LinearOperator& a,
                                                            std::span<const double> alphas,
                                                            const StochasticOptions& options) {
  const double lambda1 = eigenvalue_for(a, options);
  const auto est = stochastic_influence_curve(
      a, alphas, ProbeOptions{options.probes, options.seed, options.solve_tol, options.kind});
  std::vector<InfluenceQuantities> out;
  out.reserve(alphas.size());
  for (std::size_t j = 0; j < alphas.size(); ++j) out.push_back(assemble(alphas[j], lambda1, est[j]));
  return out;
}

}  // namespace riskreg
