#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "riskreg/path.hpp"
#include "riskreg/problems.hpp"
#include "riskreg/rules.hpp"

namespace riskreg {

/// ||f - f_true|| / ||f_true||.
double rel_error(const Vector& f, const Vector& f_true);

struct OracleResult {
  double error = 0.0;
  double alpha = 0.0;
  std::size_t index = 0;
};

/// Smallest relative error along the grid; ties go to the largest alpha.
OracleResult oracle_error(const SolutionPath& path, const Vector& f_true);

/// oracle / rule error, in (0, 1] whenever the oracle is a minimum over the
/// candidates the rule chose from.
double efficiency(double oracle, double rule_error);

/// Grid range either absolute or as multiples of s_1^2 (or its estimate).
/// Unset fields take the small-scale defaults (1e-12, 0.5, 200 points) or,
/// for parallel_tomo, the large-scale ones (0.5e-8, 0.5e-2, 100 points).
struct GridSpec {
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> min_factor;
  std::optional<double> max_factor;
  std::optional<int> points;

  AlphaGrid build(double s1_sq, bool large_scale = false) const;
};

struct ProblemSpec {
  std::string name;
  int variant = 0;
};

struct StudyConfig {
  int version = 1;
  std::vector<ProblemSpec> problems;
  std::vector<Index> sizes;
  std::vector<double> xis;
  std::vector<Rule> rules;
  int replicates = 100;
  std::uint64_t seed = 0;
  GridSpec grid;
  bool matrix_free = false;
  int probes = 20;
  double solve_tol = 1e-8;
  BpOptions bp;
  IproOptions ipro;
};

/// Throws InputError naming the first invalid field.
void validate(const StudyConfig& config);

/// Everything about one (problem, n) that does not depend on the data:
/// operator, grid and influence curve, shared read-only by all replicates.
struct CellContext {
  std::shared_ptr<const ProblemInstance> problem;
  std::shared_ptr<const SpectralDecomposition> dec;  // null on the matrix-free path
  std::shared_ptr<const InfluenceCurve> influence;
  LinearOperator op;  // matrix-free view when the path is iterative
  AlphaGrid grid;
  double solve_tol = 1e-8;

  SolutionPath path(const Vector& g) const;
};

struct CellOptions {
  bool matrix_free = false;
  int probes = 20;
  std::uint64_t seed = 0;
  double solve_tol = 1e-8;
  GridSpec grid;
};

CellContext make_cell(std::shared_ptr<const ProblemInstance> problem, const CellOptions& options);

struct RuleOutcome {
  Rule rule = Rule::pro;
  double alpha = 0.0;
  double rel_error = 0.0;
  double efficiency = 0.0;
  std::vector<std::string> flags;
  std::optional<RuleSelection> selection;  // absent when the rule failed
};

struct ReplicateOutcome {
  std::uint64_t replicate = 0;
  double sigma = 0.0;
  double oracle_error = 0.0;       // over the grid and every selected alpha
  double grid_oracle_error = 0.0;  // over the grid alone
  double oracle_alpha = 0.0;
  std::vector<RuleOutcome> rules;
};

struct ReplicateOptions {
  std::vector<Rule> rules;
  BpOptions bp;
  IproOptions ipro;
};

/// One noisy draw: shared path, every rule, oracle and efficiencies. Rule
/// failures are recorded as flagged outcomes at maximal smoothing (or the
/// last I-PRO iterate), never thrown.
ReplicateOutcome run_replicate(const CellContext& cell, double xi, std::uint64_t seed,
                               std::uint64_t replicate, const ReplicateOptions& options);

struct StudyRecord {
  std::string problem;
  int variant = 0;
  Index n = 0;
  double xi = 0.0;
  Rule rule = Rule::pro;
  std::uint64_t replicate = 0;
  double alpha = 0.0;
  double rel_error = 0.0;
  double efficiency = 0.0;
  double oracle_error = 0.0;
  std::vector<std::string> flags;
};

struct StudySummary {
  std::string problem;
  int variant = 0;
  Index n = 0;
  double xi = 0.0;
  Rule rule = Rule::pro;
  double median_eff = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min_eff = 0.0;
  double max_eff = 0.0;
  double median_oracle = 0.0;
  std::size_t count = 0;
};

struct StudyResult {
  std::vector<StudyRecord> records;  // problem, n, xi, replicate, rule order of the config
  std::vector<StudySummary> summaries;
};

/// Median with the midpoint-of-two rule; quartiles by linear interpolation
/// between order statistics (same rule at p = 1/2).
double quantile(std::vector<double> values, double p);

/// Deterministic for any worker count.
StudyResult run_study(const StudyConfig& config, int workers = 1);

/// One CSV per (n, xi) block plus summary.csv in `dir`; returns the file names written.
std::vector<std::string> write_study(const StudyResult& result, const std::string& dir);

/// Throws InputError for unknown names.
CurveKind curve_from_string(std::string_view name);

/// Samples a curve on the cell grid for the data of `path`. predictive needs
/// the spectral path, sigma and a known f_true (DegenerateError otherwise);
/// lower_bound needs sigma and uses rho2 or its estimate; upre needs sigma.
RiskCurve sample_curve(CurveKind kind, const CellContext& cell, const SolutionPath& path,
                       std::optional<double> sigma, std::optional<double> rho2);

std::string records_csv(const std::vector<StudyRecord>& records);
std::string summary_csv(const std::vector<StudySummary>& summaries);

}  // namespace riskreg
