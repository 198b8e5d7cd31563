#include "riskreg/risk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "riskreg/error.hpp"

namespace riskreg {

const char* to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::predictive: return "predictive";
    case CurveKind::lower_bound: return "lower_bound";
    case CurveKind::upre: return "upre";
    case CurveKind::gcv: return "gcv";
    case CurveKind::lcurve: return "lcurve";
  }
  return "unknown";
}

void write_csv(std::ostream& out, const RiskCurve& curve) {
  const bool lcurve = curve.kind == CurveKind::lcurve;
  out << (lcurve ? "alpha,value,kind,log_residual\n" : "alpha,value,kind\n");
  out.precision(17);
  for (std::size_t i = 0; i < curve.alphas.size(); ++i) {
    out << curve.alphas[i] << ',' << curve.values[i] << ',' << to_string(curve.kind);
    if (lcurve) out << ',' << curve.extra[i];
    out << '\n';
  }
}

double predictive_risk(const SpectralDecomposition& dec, const SpectralData& g_true,
                       double sigma2, double alpha) {
  if (!(sigma2 >= 0.0)) throw InputError("predictive_risk: sigma2 must be non-negative");
  // The out-of-range part of g_true is never reproduced by X_alpha.
  double bias = g_true.out_of_range_sq;
  double variance = 0.0;
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s2 = dec.singular_values[i] * dec.singular_values[i];
    const double damp = alpha / (s2 + alpha);
    const double keep = s2 / (s2 + alpha);
    bias += damp * damp * g_true.coefficients[i] * g_true.coefficients[i];
    variance += keep * keep;
  }
  return bias + sigma2 * variance;
}

double predictive_risk(const SpectralDecomposition& dec, const Vector& g_true, double sigma2,
                       double alpha) {
  return predictive_risk(dec, project(dec, g_true), sigma2, alpha);
}

double predictive_risk_derivative(const SpectralDecomposition& dec, const SpectralData& g_true,
                                  double sigma2, double alpha) {
  double sum = 0.0;
  for (Index i = 0; i < dec.rank(); ++i) {
    const double s2 = dec.singular_values[i] * dec.singular_values[i];
    const double d3 = (s2 + alpha) * (s2 + alpha) * (s2 + alpha);
    const double c2 = g_true.coefficients[i] * g_true.coefficients[i];
    sum += 2.0 * alpha * s2 * c2 / d3 - sigma2 * 2.0 * s2 * s2 / d3;
  }
  return sum;
}

double lower_bound_T(double rho2, double sigma2, const InfluenceQuantities& q) {
  return rho2 * q.sn_sq + sigma2 * q.frob_sq;
}

double lower_bound_T(double rho2, double sigma2, const SpectralDecomposition& dec, double alpha) {
  return lower_bound_T(rho2, sigma2, influence_exact(dec, dec.rows, alpha));
}

namespace {

// T_h in the scaled variable a = alpha / s_1^2, with t_i = s_i^2 / s_1^2.
struct ScaledObjective {
  std::vector<double> t;
  double h;
  double scale;  // s_1^2

  ScaledObjective(const SpectralDecomposition& dec, double h_) : h(h_) {
    scale = dec.largest() * dec.largest();
    t.resize(static_cast<std::size_t>(dec.rank()));
    for (Index i = 0; i < dec.rank(); ++i) {
      const double s = dec.singular_values[i] / dec.largest();
      t[static_cast<std::size_t>(i)] = s * s;
    }
  }

  double value(double a) const {
    const double lead = a / (1.0 + a);
    double f2 = 0.0;
    for (double ti : t) {
      const double x = ti / (ti + a);
      f2 += x * x;
    }
    return lead * lead + h * f2;
  }

  double derivative(double a) const {
    double f2 = 0.0;
    for (double ti : t) {
      const double d = ti + a;
      f2 += ti * ti / (d * d * d);
    }
    const double b = 1.0 + a;
    return 2.0 * a / (b * b * b) - 2.0 * h * f2;
  }

  double second_derivative(double a) const {
    double f2 = 0.0;
    for (double ti : t) {
      const double d = ti + a;
      f2 += ti * ti / (d * d * d * d);
    }
    const double b = 1.0 + a;
    return 2.0 * (1.0 - 2.0 * a) / (b * b * b * b) + 6.0 * h * f2;
  }
};

void require_spectrum(const SpectralDecomposition& dec, const char* who) {
  if (dec.rank() == 0) throw InputError(std::string(who) + ": operator has rank zero");
}

}  // namespace

double T_h(const SpectralDecomposition& dec, double h, double alpha) {
  require_spectrum(dec, "T_h");
  const ScaledObjective obj(dec, h);
  return obj.value(alpha / obj.scale);
}

double T_h_derivative(const SpectralDecomposition& dec, double h, double alpha) {
  require_spectrum(dec, "T_h_derivative");
  const ScaledObjective obj(dec, h);
  return obj.derivative(alpha / obj.scale) / obj.scale;
}

double T_h_second_derivative(const SpectralDecomposition& dec, double h, double alpha) {
  require_spectrum(dec, "T_h_second_derivative");
  const ScaledObjective obj(dec, h);
  return obj.second_derivative(alpha / obj.scale) / (obj.scale * obj.scale);
}

MinimizerResult minimize_T(const SpectralDecomposition& dec, double h) {
  require_spectrum(dec, "minimize_T");
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("minimize_T: h must be positive and finite");
  const ScaledObjective obj(dec, h);

  MinimizerResult res;
  double lo = 0.0;
  double hi = 0.5;
  if (obj.derivative(hi) <= 0.0) {
    // Still descending at s_1^2 / 2 (very low SNR or a flat spectrum): walk
    // right to the first stationary point. T_h' > 0 for alpha > h sum s_i^4 / s_1^2.
    res.boundary = true;
    while (obj.derivative(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
    }
    if (obj.derivative(hi) == 0.0) lo = hi;
  }
  // Any stationary point satisfies alpha >= s_1^2 h.
  if (h > lo && h < hi && obj.derivative(h) <= 0.0) lo = h;
  if (lo == hi) {
    res.alpha_star = hi * obj.scale;
    res.objective = obj.value(hi);
    res.lo = res.hi = res.alpha_star;
    res.converged = true;
    return res;
  }

  constexpr int kNewtonCap = 100;
  constexpr int kTotalCap = 2000;
  constexpr double kRelWidth = 1e-15;
  double a = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
  for (int it = 1; it <= kTotalCap; ++it) {
    res.iterations = it;
    const double d = obj.derivative(a);
    if (d == 0.0) {
      lo = hi = a;
      break;
    }
    if (d < 0.0) lo = a; else hi = a;
    if (hi - lo <= kRelWidth * hi) break;

    double next = -1.0;
    if (it <= kNewtonCap) {
      const double dd = obj.second_derivative(a);
      if (dd > 0.0) next = a - d / dd;
    }
    if (!(next > lo && next < hi)) {
      next = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    }
    if (std::abs(next - a) <= 0.25 * kRelWidth * a) {
      lo = hi = next;
      a = next;
      break;
    }
    a = next;
  }
  res.alpha_star = std::clamp(a, lo, hi) * obj.scale;
  res.lo = lo * obj.scale;
  res.hi = hi * obj.scale;
  res.objective = obj.value(res.alpha_star / obj.scale);
  const double tol_d = 1e-10 * (1.0 + h);
  res.converged = (hi - lo <= 1e-12 * hi) ||
                  std::abs(obj.derivative(res.alpha_star / obj.scale) / obj.scale) <= tol_d;
  return res;
}

AlphaBounds alpha_bounds(const SpectralDecomposition& dec, double h) {
  require_spectrum(dec, "alpha_bounds");
  if (!(h > 0.0)) throw InputError("alpha_bounds: h must be positive");
  const double s1sq = dec.largest() * dec.largest();
  AlphaBounds b;
  b.lo = s1sq * h;
  const double zeta = s1sq / dec.trace_gram();
  if (h < zeta) {
    const double c = std::cbrt(h / zeta);
    b.hi = s1sq * c / (1.0 - c);
  }
  return b;
}

bool global_minimizer_certificate(const SpectralDecomposition& dec, double h) {
  return dec.rank() > 0 && h <= 1.0 / (27.0 * static_cast<double>(dec.rank()));
}

double upper_bound_threshold(const SpectralDecomposition& dec) {
  require_spectrum(dec, "upper_bound_threshold");
  return std::pow(dec.largest(), 4.0 / 3.0) * std::pow(dec.smallest(), 2.0 / 3.0);
}

std::size_t argmin_T_on_grid(std::span<const InfluenceQuantities> curve, double rho2,
                             double sigma2) {
  if (curve.empty()) throw InputError("argmin_T_on_grid: empty curve");
  std::size_t best = 0;
  double best_value = INFINITY;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double v = lower_bound_T(rho2, sigma2, curve[i]);
    if (v <= best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

}  // namespace riskreg
