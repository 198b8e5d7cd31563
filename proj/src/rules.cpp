#include "riskreg/rules.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "riskreg/error.hpp"

namespace riskreg {

namespace {

constexpr std::array<std::pair<Rule, const char*>, 8> kRuleNames{{{Rule::pro, "pro"},
                                                                  {Rule::ipro, "ipro"},
                                                                  {Rule::dp, "dp"},
                                                                  {Rule::upre, "upre"},
                                                                  {Rule::bp, "bp"},
                                                                  {Rule::gcv, "gcv"},
                                                                  {Rule::lc, "lc"},
                                                                  {Rule::qoc, "qoc"}}};

// Index of the smallest value; ties resolve to the largest alpha.
std::size_t argmin_last(const std::vector<double>& values) {
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= best_value) {
      best_value = values[i];
      best = i;
    }
  }
  return best;
}

RuleSelection on_grid(Rule rule, const SolutionPath& path, std::size_t k) {
  RuleSelection sel;
  sel.rule = rule;
  sel.alpha = path.alpha(k);
  sel.grid_index = static_cast<int>(k);
  return sel;
}

const InfluenceCurve& influence_of(const SolutionPath& path) {
  if (!path.influence || path.influence->values.size() != path.size()) {
    throw InputError("rule needs influence quantities on the path grid");
  }
  return *path.influence;
}

double residual_of(const SolutionPath& path, double alpha) {
  if (path.dec) return spectral_residual_norm(*path.dec, path.data, alpha);
  return path.residual_at(alpha);
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InputError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

const char* to_string(Rule rule) {
  for (const auto& [r, name] : kRuleNames) {
    if (r == rule) return name;
  }
  return "unknown";
}

Rule rule_from_string(std::string_view name) {
  for (const auto& [r, n] : kRuleNames) {
    if (name == n) return r;
  }
  throw InputError("unknown rule '" + std::string(name) + "'");
}

bool needs_sigma(Rule rule) {
  return rule == Rule::pro || rule == Rule::dp || rule == Rule::upre || rule == Rule::bp;
}

bool RuleSelection::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::string to_json(const RuleSelection& s) {
  nlohmann::json j;
  j["rule"] = to_string(s.rule);
  j["alpha"] = s.alpha;
  j["xi_hat"] = s.xi_hat ? nlohmann::json(*s.xi_hat) : nlohmann::json(nullptr);
  j["rho2_hat"] = s.rho2_hat ? nlohmann::json(*s.rho2_hat) : nlohmann::json(nullptr);
  j["sigma2_hat"] = s.sigma2_hat ? nlohmann::json(*s.sigma2_hat) : nlohmann::json(nullptr);
  j["iterations"] = s.iterations;
  j["flags"] = s.flags;
  if (s.grid_index >= 0) j["grid_index"] = s.grid_index;
  if (!s.iterates.empty()) j["iterates"] = s.iterates;
  if (!s.h_trail.empty()) j["h_trail"] = s.h_trail;
  return j.dump();
}

double snr_db(double rho2, double sigma2, Index n) {
  return 10.0 * std::log10(rho2 / (static_cast<double>(n) * sigma2));
}

double estimate_rho2(const Vector& g, double sigma2) {
  return g.squaredNorm() - static_cast<double>(g.size()) * sigma2;
}

RuleSelection pro(const SpectralDecomposition& dec, double rho2, double sigma2) {
  require_positive(rho2, "pro: rho2");
  require_positive(sigma2, "pro: sigma2");
  const MinimizerResult m = minimize_T(dec, sigma2 / rho2);
  RuleSelection sel;
  sel.rule = Rule::pro;
  sel.alpha = m.alpha_star;
  sel.iterations = m.iterations;
  sel.rho2_hat = rho2;
  sel.sigma2_hat = sigma2;
  sel.xi_hat = snr_db(rho2, sigma2, dec.rows);
  if (m.boundary) sel.flags.emplace_back("boundary");
  if (!m.converged) sel.flags.emplace_back("not_converged");
  return sel;
}

RuleSelection pro(const SolutionPath& path, double rho2, double sigma2) {
  if (path.dec) return pro(*path.dec, rho2, sigma2);
  require_positive(rho2, "pro: rho2");
  require_positive(sigma2, "pro: sigma2");
  const InfluenceCurve& curve = influence_of(path);
  const std::size_t k = argmin_T_on_grid(curve.values, rho2, sigma2);
  RuleSelection sel = on_grid(Rule::pro, path, k);
  sel.rho2_hat = rho2;
  sel.sigma2_hat = sigma2;
  sel.xi_hat = snr_db(rho2, sigma2, path.rows());
  sel.objective.reserve(curve.values.size());
  for (const auto& q : curve.values) sel.objective.push_back(lower_bound_T(rho2, sigma2, q));
  return sel;
}

RuleSelection pro_estimated(const SolutionPath& path, double sigma2, bool fallback_to_max) {
  require_positive(sigma2, "pro: sigma2");
  const double rho2 = estimate_rho2(path.g, sigma2);
  if (!(rho2 > 0.0)) {
    if (!fallback_to_max) {
      throw DegenerateError("pro: estimated data norm " + std::to_string(rho2) +
                            " is not positive; data indistinguishable from noise");
    }
    RuleSelection sel = on_grid(Rule::pro, path, path.size() - 1);
    sel.rho2_hat = rho2;
    sel.sigma2_hat = sigma2;
    sel.flags.emplace_back("degenerate_snr");
    return sel;
  }
  return pro(path, rho2, sigma2);
}

RuleSelection ipro(const SolutionPath& path, const IproOptions& options) {
  const double n = static_cast<double>(path.rows());
  const bool on_grid_mode = !path.dec;
  const InfluenceCurve* curve = on_grid_mode ? &influence_of(path) : nullptr;

  double alpha = options.alpha_init ? *options.alpha_init : path.alpha(path.grid.midpoint());
  require_positive(alpha, "ipro: alpha_init");

  RuleSelection sel;
  sel.rule = Rule::ipro;
  sel.iterates.push_back(alpha);

  auto estimates = [&](double a, double& rho2, double& sigma2) {
    const double r = residual_of(path, a);
    sigma2 = r * r / n;
    rho2 = path.data_norm_sq - r * r;
    if (!(sigma2 > 0.0)) {
      throw DegenerateError("ipro: residual vanishes at alpha = " + std::to_string(a));
    }
    if (!(rho2 > 0.0)) {
      throw DegenerateError("ipro: residual exhausts the data norm at alpha = " + std::to_string(a));
    }
  };

  double rho2 = 0.0;
  double sigma2 = 0.0;
  for (int k = 1; k <= options.max_iter; ++k) {
    estimates(alpha, rho2, sigma2);
    const double h = sigma2 / rho2;
    double next = 0.0;
    int index = -1;
    if (on_grid_mode) {
      index = static_cast<int>(argmin_T_on_grid(curve->values, rho2, sigma2));
      next = path.alpha(static_cast<std::size_t>(index));
    } else {
      const MinimizerResult m = minimize_T(*path.dec, h);
      next = m.alpha_star;
      if (m.boundary && !sel.has_flag("boundary")) sel.flags.emplace_back("boundary");
    }
    sel.iterations = k;

    const double step = next - alpha;
    const std::size_t t = sel.iterates.size();
    // The exact iterates are monotone; a reversal means rounding noise has
    // taken over and the fixed point is resolved to machine precision.
    if (t >= 2) {
      const double prev_step = sel.iterates[t - 1] - sel.iterates[t - 2];
      if (prev_step != 0.0 && step != 0.0 && (step > 0.0) != (prev_step > 0.0)) {
        sel.flags.emplace_back("rounding_floor");
        break;
      }
    }
    sel.h_trail.push_back(h);
    sel.iterates.push_back(next);
    sel.grid_index = index;
    alpha = next;
    if (std::abs(step) <= std::max(options.eps * next, options.abs_floor)) break;
    if (k == options.max_iter) {
      throw ConvergenceError("ipro: no fixed point within " + std::to_string(options.max_iter) +
                                 " iterations",
                             sel.iterates);
    }
  }
  estimates(alpha, rho2, sigma2);
  sel.alpha = alpha;
  sel.rho2_hat = rho2;
  sel.sigma2_hat = sigma2;
  sel.xi_hat = snr_db(rho2, sigma2, path.rows());
  return sel;
}

RuleSelection dp(const SolutionPath& path, double sigma) {
  if (!(sigma >= 0.0)) throw InputError("dp: sigma must be non-negative");
  const double target = std::sqrt(static_cast<double>(path.rows())) * sigma;
  const auto& res = path.residual_norms;
  std::size_t k = 0;
  while (k < res.size() && res[k] < target) ++k;

  if (k == res.size()) {
    RuleSelection sel = on_grid(Rule::dp, path, res.size() - 1);
    sel.flags.emplace_back("saturated");
    return sel;
  }
  if (k == 0 || sigma == 0.0) {
    RuleSelection sel = on_grid(Rule::dp, path, 0);
    sel.flags.emplace_back("below_grid");
    return sel;
  }
  // Bisection in log alpha; residual is nondecreasing in alpha.
  double lo = path.alpha(k - 1);
  double hi = path.alpha(k);
  int it = 0;
  while (hi / lo - 1.0 > 1e-6 && it < 200) {
    const double mid = std::sqrt(lo * hi);
    if (residual_of(path, mid) >= target) hi = mid; else lo = mid;
    ++it;
  }
  RuleSelection sel;
  sel.rule = Rule::dp;
  sel.alpha = hi;
  sel.iterations = it;
  return sel;
}

RuleSelection upre(const SolutionPath& path, double sigma2) {
  if (!(sigma2 >= 0.0)) throw InputError("upre: sigma2 must be non-negative");
  const InfluenceCurve& curve = influence_of(path);
  const double n = static_cast<double>(path.rows());
  std::vector<double> obj(path.size());
  for (std::size_t k = 0; k < obj.size(); ++k) {
    const double r = path.residual_norms[k];
    obj[k] = r * r - 2.0 * sigma2 * (n - curve.values[k].trace);
  }
  RuleSelection sel = on_grid(Rule::upre, path, argmin_last(obj));
  sel.objective = std::move(obj);
  return sel;
}

RuleSelection gcv(const SolutionPath& path) {
  const InfluenceCurve& curve = influence_of(path);
  const double n = static_cast<double>(path.rows());
  std::vector<double> obj(path.size());
  for (std::size_t k = 0; k < obj.size(); ++k) {
    const double r = path.residual_norms[k];
    const double denom = n - curve.values[k].trace;
    obj[k] = denom > 0.0 ? r * r / (denom * denom) : std::numeric_limits<double>::infinity();
  }
  RuleSelection sel = on_grid(Rule::gcv, path, argmin_last(obj));
  sel.objective = std::move(obj);
  return sel;
}

RuleSelection bp(const SolutionPath& path, double sigma, const BpOptions& options) {
  if (!(sigma >= 0.0)) throw InputError("bp: sigma must be non-negative");
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) throw InputError("bp: gamma must be in (0, 1)");
  const InfluenceCurve& curve = influence_of(path);
  const std::size_t k = path.size();
  const double q = path.grid.ratio();
  const auto stride = static_cast<std::size_t>(
      std::max(1.0, std::round(std::log(1.0 / options.gamma) / std::log(q))));

  // Subgrid alpha_max, alpha_max * gamma, ... in ascending order.
  std::vector<std::size_t> sub;
  for (std::size_t idx = k - 1;; idx -= stride) {
    sub.push_back(idx);
    if (idx < stride) break;
  }
  std::reverse(sub.begin(), sub.end());

  std::vector<double> threshold(sub.size());
  for (std::size_t j = 0; j < sub.size(); ++j) {
    threshold[j] = options.c * sigma * std::sqrt(curve.values[sub[j]].propagation_sq);
  }

  RuleSelection sel;
  sel.rule = Rule::bp;
  sel.admissible.assign(sub.size(), 0);
  std::size_t chosen = 0;
  for (std::size_t j = 0; j < sub.size(); ++j) {
    bool ok = true;
    const auto fa = path.solutions.col(static_cast<Index>(sub[j]));
    for (std::size_t b = 0; b < j && ok; ++b) {
      const double diff = (fa - path.solutions.col(static_cast<Index>(sub[b]))).norm();
      ok = diff <= threshold[b];
    }
    if (!ok) break;
    sel.admissible[j] = 1;
    chosen = j;
  }
  sel.alpha = path.alpha(sub[chosen]);
  sel.grid_index = static_cast<int>(sub[chosen]);
  if (sigma == 0.0) sel.flags.emplace_back("degenerate");
  if (chosen + 1 == sub.size()) sel.flags.emplace_back("saturated");
  return sel;
}

RuleSelection lc(const SolutionPath& path) {
  const std::size_t k = path.size();
  if (k < 3) throw InputError("lc: grid needs at least three points");
  constexpr double kTiny = 1e-300;
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = std::log(std::max(path.residual_norms[i], kTiny));
    y[i] = std::log(std::max(path.solution_norms[i], kTiny));
  }
  std::vector<double> kappa(k, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double dx = 0.5 * (x[i + 1] - x[i - 1]);
    const double dy = 0.5 * (y[i + 1] - y[i - 1]);
    const double ddx = x[i + 1] - 2.0 * x[i] + x[i - 1];
    const double ddy = y[i + 1] - 2.0 * y[i] + y[i - 1];
    const double speed = dx * dx + dy * dy;
    if (speed > 0.0) kappa[i] = (dx * ddy - ddx * dy) / std::pow(speed, 1.5);
  }
  const std::size_t best = std::distance(
      kappa.begin(), std::max_element(kappa.begin(), kappa.end(),
                                      [](double a, double b) { return a <= b; }));
  RuleSelection sel = on_grid(Rule::lc, path, best);
  if (best == 1 || best + 2 == k) sel.flags.emplace_back("boundary");
  sel.objective = std::move(kappa);
  return sel;
}

RuleSelection qoc(const SolutionPath& path) {
  const std::size_t k = path.size();
  if (k < 2) throw InputError("qoc: grid needs at least two points");
  // Below s_r^2 the path freezes at the pseudoinverse solution and the
  // differences vanish trivially; scan only alpha >= s_r^2 when it is known.
  std::size_t first = 0;
  if (path.dec && path.dec->rank() > 0) {
    const double floor = path.dec->smallest() * path.dec->smallest();
    while (first + 2 < k && path.alpha(first) < floor) ++first;
  }
  std::vector<double> diff(k - 1, std::numeric_limits<double>::infinity());
  for (std::size_t i = first; i + 1 < k; ++i) {
    diff[i] = (path.solutions.col(static_cast<Index>(i + 1)) -
               path.solutions.col(static_cast<Index>(i)))
                  .norm();
  }
  const std::size_t best = argmin_last(diff);
  RuleSelection sel = on_grid(Rule::qoc, path, best);
  if (best + 2 == k) sel.flags.emplace_back("boundary");
  sel.objective = std::move(diff);
  return sel;
}

RuleSelection select(Rule rule, const SolutionPath& path, const RuleParams& params) {
  if (needs_sigma(rule) && !params.sigma) {
    throw InputError(std::string("rule '") + to_string(rule) + "' requires sigma");
  }
  switch (rule) {
    case Rule::pro: {
      const double sigma2 = *params.sigma * *params.sigma;
      if (params.rho2) return pro(path, *params.rho2, sigma2);
      return pro_estimated(path, sigma2, params.pro_fallback);
    }
    case Rule::ipro: return ipro(path, params.ipro);
    case Rule::dp: return dp(path, *params.sigma);
    case Rule::upre: return upre(path, *params.sigma * *params.sigma);
    case Rule::bp: return bp(path, *params.sigma, params.bp);
    case Rule::gcv: return gcv(path);
    case Rule::lc: return lc(path);
    case Rule::qoc: return qoc(path);
  }
  throw InputError("unknown rule");
}

}  // namespace riskreg
