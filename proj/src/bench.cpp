#include "riskreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "riskreg/error.hpp"

namespace riskreg {

namespace {

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception by index is rethrown, so failures do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) out += ';';
    out += flags[i];
  }
  return out;
}

std::string block_name(Index n, double xi) {
  std::ostringstream os;
  os << "block_n" << n << "_xi" << xi << ".csv";
  return os.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw InputError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

double rel_error(const Vector& f, const Vector& f_true) {
  if (f.size() != f_true.size()) throw InputError("rel_error: length mismatch");
  const double denom = f_true.norm();
  if (!(denom > 0.0)) throw InputError("rel_error: f_true is zero");
  return (f - f_true).norm() / denom;
}

OracleResult oracle_error(const SolutionPath& path, const Vector& f_true) {
  OracleResult best;
  best.error = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double e = rel_error(path.solutions.col(static_cast<Index>(k)), f_true);
    if (e <= best.error) {
      best.error = e;
      best.alpha = path.alpha(k);
      best.index = k;
    }
  }
  return best;
}

double efficiency(double oracle, double rule_error) {
  if (!(rule_error > 0.0)) return 1.0;
  return std::min(1.0, oracle / rule_error);
}

AlphaGrid GridSpec::build(double s1_sq, bool large_scale) const {
  const double lo_f = min_factor.value_or(large_scale ? 0.5e-8 : 1e-12);
  const double hi_f = max_factor.value_or(large_scale ? 0.5e-2 : 0.5);
  const int k = points.value_or(large_scale ? 100 : 200);
  return AlphaGrid::logspace(min.value_or(lo_f * s1_sq), max.value_or(hi_f * s1_sq), k);
}

void validate(const StudyConfig& c) {
  if (c.version != 1) throw InputError("config: unsupported version " + std::to_string(c.version));
  if (c.problems.empty()) throw InputError("config: problems must not be empty");
  for (const auto& p : c.problems) {
    const auto& names = problem_names();
    if (std::find(names.begin(), names.end(), p.name) == names.end()) {
      throw InputError("config: unknown problem '" + p.name + "'");
    }
    const auto vs = problem_variants(p.name);
    if (std::find(vs.begin(), vs.end(), p.variant) == vs.end()) {
      throw InputError("config: problem '" + p.name + "' has no variant " + std::to_string(p.variant));
    }
  }
  if (c.sizes.empty()) throw InputError("config: sizes must not be empty");
  for (const auto& p : c.problems) {
    for (Index n : c.sizes) check_problem_size(p.name, n);
  }
  if (c.xis.empty()) throw InputError("config: xi must not be empty");
  for (double x : c.xis) {
    if (!std::isfinite(x)) throw InputError("config: xi must be finite");
  }
  if (c.rules.empty()) throw InputError("config: rules must not be empty");
  if (c.replicates < 1) throw InputError("config: replicates must be at least 1");
  if (c.probes < 1) throw InputError("config: probes must be at least 1");
  if (!(c.solve_tol > 0.0 && c.solve_tol < 1.0)) throw InputError("config: solve_tol must be in (0, 1)");
  if (c.grid.points && *c.grid.points < 3) throw InputError("config: grid needs at least 3 points");
  if (c.grid.min && c.grid.max && !(*c.grid.min > 0.0 && *c.grid.max > *c.grid.min)) {
    throw InputError("config: grid needs 0 < min < max");
  }
  if ((c.grid.min_factor && !(*c.grid.min_factor > 0.0)) ||
      (c.grid.max_factor && !(*c.grid.max_factor > 0.0))) {
    throw InputError("config: grid factors must be positive");
  }
  if (!(c.bp.gamma > 0.0 && c.bp.gamma < 1.0)) throw InputError("config: bp.gamma must be in (0, 1)");
  if (!(c.bp.c > 0.0)) throw InputError("config: bp.c must be positive");
  if (c.ipro.max_iter < 1) throw InputError("config: ipro.max_iter must be at least 1");
}

SolutionPath CellContext::path(const Vector& g) const {
  if (dec) return spectral_path(dec, g, grid, influence);
  return iterative_path(op, g, grid, influence, solve_tol);
}

CellContext make_cell(std::shared_ptr<const ProblemInstance> problem, const CellOptions& options) {
  if (!problem) throw InputError("make_cell: missing problem");
  const bool large_scale = problem->tomo.has_value();
  const bool iterative = options.matrix_free || problem->a.representation() != Representation::dense;
  if (!iterative) {
    auto dec = std::make_shared<const SpectralDecomposition>(svd(problem->a));
    AlphaGrid grid = options.grid.build(dec->largest() * dec->largest(), large_scale);
    auto influence = std::make_shared<const InfluenceCurve>(exact_influence_curve(*dec, grid));
    return CellContext{problem, dec, influence, problem->a, std::move(grid), options.solve_tol};
  }
  LinearOperator op = problem->a.as_matrix_free();
  StochasticOptions so;
  so.probes = options.probes;
  so.seed = options.seed;
  so.solve_tol = options.solve_tol;
  const double lambda1 = largest_eigenvalue(op, so.power_tol, so.power_max_iter, so.seed);
  AlphaGrid grid = options.grid.build(lambda1, large_scale);
  auto influence = std::make_shared<const InfluenceCurve>(stochastic_influence_curve(op, grid, so));
  return CellContext{problem, nullptr, influence, op, std::move(grid), options.solve_tol};
}

ReplicateOutcome run_replicate(const CellContext& cell, double xi, std::uint64_t seed,
                               std::uint64_t replicate, const ReplicateOptions& options) {
  const ProblemInstance& p = *cell.problem;
  const NoisyData noisy = add_noise(p, xi, seed, replicate);
  const SolutionPath path = cell.path(noisy.g);

  ReplicateOutcome out;
  out.replicate = replicate;
  out.sigma = noisy.sigma;
  const OracleResult grid_oracle = oracle_error(path, p.f_true);
  out.grid_oracle_error = grid_oracle.error;
  out.oracle_error = grid_oracle.error;
  out.oracle_alpha = grid_oracle.alpha;

  RuleParams params;
  params.sigma = noisy.sigma;
  params.pro_fallback = true;
  params.bp = options.bp;
  params.ipro = options.ipro;

  const std::size_t last = path.size() - 1;
  auto solution_at = [&](double alpha, int index) -> Vector {
    if (index >= 0) return path.solutions.col(index);
    return path.evaluate(alpha).f_alpha;
  };

  for (Rule rule : options.rules) {
    RuleOutcome r;
    r.rule = rule;
    int index = -1;
    try {
      RuleSelection sel = select(rule, path, params);
      r.alpha = sel.alpha;
      index = sel.grid_index;
      r.flags = sel.flags;
      r.selection = std::move(sel);
    } catch (const ConvergenceError& e) {
      r.flags.emplace_back("error_convergence");
      if (rule == Rule::ipro && !e.trail().empty()) {
        r.alpha = e.trail().back();
      } else {
        r.alpha = path.alpha(last);
        index = static_cast<int>(last);
      }
    } catch (const DegenerateError&) {
      r.flags.emplace_back("error_degenerate");
      r.alpha = path.alpha(last);
      index = static_cast<int>(last);
    }
    r.rel_error = rel_error(solution_at(r.alpha, index), p.f_true);
    if (r.rel_error < out.oracle_error) {
      out.oracle_error = r.rel_error;
      out.oracle_alpha = r.alpha;
    }
    out.rules.push_back(std::move(r));
  }
  for (auto& r : out.rules) r.efficiency = efficiency(out.oracle_error, r.rel_error);
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  // At p = 1/2 with an even count this is exactly the midpoint of the two middle values.
  return values[lo] + frac * (values[hi] - values[lo]);
}

StudyResult run_study(const StudyConfig& config, int workers) {
  validate(config);

  struct CellKey {
    ProblemSpec spec;
    Index n;
  };
  std::vector<CellKey> keys;
  for (const auto& spec : config.problems) {
    for (Index n : config.sizes) keys.push_back({spec, n});
  }

  std::vector<std::optional<CellContext>> cells(keys.size());
  parallel_for(keys.size(), workers, [&](std::size_t i) {
    auto problem = std::make_shared<const ProblemInstance>(
        make_problem(keys[i].spec.name, keys[i].spec.variant, keys[i].n));
    CellOptions co;
    co.matrix_free = config.matrix_free;
    co.probes = config.probes;
    co.seed = config.seed;
    co.solve_tol = config.solve_tol;
    co.grid = config.grid;
    cells[i] = make_cell(std::move(problem), co);
  });

  const std::size_t nx = config.xis.size();
  const auto nr = static_cast<std::size_t>(config.replicates);
  const std::size_t units = keys.size() * nx * nr;
  std::vector<std::optional<ReplicateOutcome>> outcomes(units);
  ReplicateOptions ro{config.rules, config.bp, config.ipro};
  parallel_for(units, workers, [&](std::size_t u) {
    const std::size_t c = u / (nx * nr);
    const std::size_t x = (u / nr) % nx;
    const std::size_t r = u % nr;
    outcomes[u] = run_replicate(*cells[c], config.xis[x], config.seed, r, ro);
  });

  StudyResult result;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    for (std::size_t x = 0; x < nx; ++x) {
      std::vector<std::vector<double>> effs(config.rules.size());
      std::vector<double> oracles;
      for (std::size_t r = 0; r < nr; ++r) {
        const ReplicateOutcome& o = *outcomes[(c * nx + x) * nr + r];
        oracles.push_back(o.oracle_error);
        for (std::size_t q = 0; q < o.rules.size(); ++q) {
          const RuleOutcome& ro2 = o.rules[q];
          result.records.push_back(StudyRecord{keys[c].spec.name, keys[c].spec.variant, keys[c].n,
                                               config.xis[x], ro2.rule, r, ro2.alpha, ro2.rel_error,
                                               ro2.efficiency, o.oracle_error, ro2.flags});
          effs[q].push_back(ro2.efficiency);
        }
      }
      const double med_oracle = quantile(oracles, 0.5);
      for (std::size_t q = 0; q < config.rules.size(); ++q) {
        StudySummary s;
        s.problem = keys[c].spec.name;
        s.variant = keys[c].spec.variant;
        s.n = keys[c].n;
        s.xi = config.xis[x];
        s.rule = config.rules[q];
        s.median_eff = quantile(effs[q], 0.5);
        s.q1 = quantile(effs[q], 0.25);
        s.q3 = quantile(effs[q], 0.75);
        s.min_eff = *std::min_element(effs[q].begin(), effs[q].end());
        s.max_eff = *std::max_element(effs[q].begin(), effs[q].end());
        s.median_oracle = med_oracle;
        s.count = effs[q].size();
        result.summaries.push_back(s);
      }
    }
  }
  return result;
}

CurveKind curve_from_string(std::string_view name) {
  for (CurveKind k : {CurveKind::predictive, CurveKind::lower_bound, CurveKind::upre, CurveKind::gcv,
                      CurveKind::lcurve}) {
    if (name == to_string(k)) return k;
  }
  throw InputError("unknown curve kind '" + std::string(name) + "'");
}

RiskCurve sample_curve(CurveKind kind, const CellContext& cell, const SolutionPath& path,
                       std::optional<double> sigma, std::optional<double> rho2) {
  RiskCurve curve;
  curve.kind = kind;
  curve.alphas = path.grid.values;
  auto need_sigma = [&]() {
    if (!sigma) throw InputError(std::string(to_string(kind)) + " curve requires sigma");
    return *sigma * *sigma;
  };
  switch (kind) {
    case CurveKind::predictive: {
      const double s2 = need_sigma();
      if (cell.problem->f_true.size() == 0) {
        throw DegenerateError("predictive curve requires f_true in the problem");
      }
      if (!cell.dec) throw InputError("predictive curve requires the spectral path");
      const SpectralData truth = project(*cell.dec, cell.problem->g_true);
      for (double a : curve.alphas) curve.values.push_back(predictive_risk(*cell.dec, truth, s2, a));
      break;
    }
    case CurveKind::lower_bound: {
      const double s2 = need_sigma();
      const double r2 = rho2 ? *rho2 : estimate_rho2(path.g, s2);
      if (!(r2 > 0.0)) throw DegenerateError("lower_bound curve: estimated data norm is not positive");
      for (const auto& q : cell.influence->values) curve.values.push_back(lower_bound_T(r2, s2, q));
      break;
    }
    case CurveKind::upre: {
      curve.values = upre(path, need_sigma()).objective;
      break;
    }
    case CurveKind::gcv: {
      curve.values = gcv(path).objective;
      break;
    }
    case CurveKind::lcurve: {
      for (std::size_t k = 0; k < path.size(); ++k) {
        curve.values.push_back(std::log(path.solution_norms[k]));
        curve.extra.push_back(std::log(path.residual_norms[k]));
      }
      break;
    }
  }
  return curve;
}

std::string records_csv(const std::vector<StudyRecord>& records) {
  std::string out = "problem,variant,n,xi,rule,replicate,alpha,rel_error,efficiency,flags\n";
  for (const auto& r : records) {
    out += r.problem + ',' + std::to_string(r.variant) + ',' + std::to_string(r.n) + ',' + fmt(r.xi) +
           ',' + to_string(r.rule) + ',' + std::to_string(r.replicate) + ',' + fmt(r.alpha) + ',' +
           fmt(r.rel_error) + ',' + fmt(r.efficiency) + ',' + join_flags(r.flags) + '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<StudySummary>& summaries) {
  std::string out = "problem,variant,n,xi,rule,median_eff,q1,q3,median_oracle\n";
  for (const auto& s : summaries) {
    out += s.problem + ',' + std::to_string(s.variant) + ',' + std::to_string(s.n) + ',' + fmt(s.xi) +
           ',' + to_string(s.rule) + ',' + fmt(s.median_eff) + ',' + fmt(s.q1) + ',' + fmt(s.q3) +
           ',' + fmt(s.median_oracle) + '\n';
  }
  return out;
}

std::vector<std::string> write_study(const StudyResult& result, const std::string& dir) {
  // Blocks keyed by (n, xi) in order of first appearance.
  std::vector<std::pair<Index, double>> order;
  std::map<std::pair<Index, double>, std::vector<StudyRecord>> blocks;
  for (const auto& r : result.records) {
    const auto key = std::make_pair(r.n, r.xi);
    auto [it, inserted] = blocks.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r);
  }
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& key : order) {
    const std::string name = block_name(key.first, key.second);
    write_atomically(std::filesystem::path(dir) / name, records_csv(blocks[key]));
    written.push_back(name);
  }
  write_atomically(std::filesystem::path(dir) / "summary.csv", summary_csv(result.summaries));
  written.emplace_back("summary.csv");
  return written;
}

}  // namespace riskreg
