#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "riskreg/bench.hpp"
#include "riskreg/config.hpp"
#include "riskreg/error.hpp"

using namespace riskreg;

namespace {

StudyConfig small_config() {
  StudyConfig c;
  c.problems = {{"shaw", 0}, {"heat", 5}};
  c.sizes = {32};
  c.xis = {10.0, 20.0};
  c.rules = {Rule::pro, Rule::ipro, Rule::dp, Rule::upre, Rule::bp, Rule::gcv, Rule::lc, Rule::qoc};
  c.replicates = 6;
  c.seed = 77;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Metrics, RelError) {
  const Vector f = Vector::LinSpaced(5, 1.0, 5.0);
  EXPECT_EQ(rel_error(f, f), 0.0);
  EXPECT_DOUBLE_EQ(rel_error(Vector::Zero(5), f), 1.0);
  EXPECT_DOUBLE_EQ(rel_error(2.0 * f, f), 1.0);
}

TEST(Metrics, Efficiency) {
  EXPECT_DOUBLE_EQ(efficiency(0.3, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(efficiency(0.3, 0.6), 0.5);
}

TEST(Metrics, Quantile) {
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({5.0, 1.0, 3.0}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 1.0), 4.0);
}

TEST(Oracle, MonotonePathPicksEndpoint) {
  const Index n = 4;
  auto dec = std::make_shared<const SpectralDecomposition>(svd(LinearOperator::dense(Matrix::Identity(n, n))));
  const Vector f = Vector::Ones(n);
  // g = f: error alpha / (1 + alpha) grows with alpha, so the smallest wins.
  const auto grid = AlphaGrid::logspace(1e-4, 1.0, 9);
  const auto o = oracle_error(spectral_path(dec, f, grid), f);
  EXPECT_EQ(o.index, 0u);
  EXPECT_DOUBLE_EQ(o.alpha, 1e-4);
  EXPECT_NEAR(o.error, 1e-4 / (1 + 1e-4), 1e-15);
}

TEST(Oracle, TiesGoToLargestAlpha) {
  const Index n = 3;
  auto dec = std::make_shared<const SpectralDecomposition>(svd(LinearOperator::dense(Matrix::Identity(n, n))));
  // g = 0: every solution is 0, error 1 everywhere.
  const auto o = oracle_error(spectral_path(dec, Vector::Zero(n), AlphaGrid::logspace(1e-3, 1.0, 5)), Vector::Ones(n));
  EXPECT_EQ(o.index, 4u);
}

TEST(Grid, Logspace) {
  const auto g = AlphaGrid::logspace(1e-6, 1.0, 7);
  EXPECT_DOUBLE_EQ(g.values.front(), 1e-6);
  EXPECT_DOUBLE_EQ(g.values.back(), 1.0);
  for (std::size_t k = 1; k < g.size(); ++k) {
    EXPECT_NEAR(g.values[k] / g.values[k - 1], 10.0, 1e-12);
  }
  EXPECT_EQ(g.midpoint(), 3u);
  EXPECT_EQ(g.nearest(0.02), 4u);  // nearest in log scale
  EXPECT_EQ(g.nearest(0.05), 5u);
}

TEST(Grid, DefaultsAndSpec) {
  const auto small = AlphaGrid::default_small_scale(4.0);
  EXPECT_EQ(small.size(), 200u);
  EXPECT_DOUBLE_EQ(small.min, 4e-12);
  EXPECT_DOUBLE_EQ(small.max, 2.0);
  const auto large = AlphaGrid::default_large_scale(4.0);
  EXPECT_EQ(large.size(), 100u);
  EXPECT_DOUBLE_EQ(large.min, 2e-8);
  EXPECT_DOUBLE_EQ(large.max, 2e-2);
  GridSpec spec;
  spec.min = 1e-3;
  spec.max_factor = 0.25;
  spec.points = 11;
  const auto g = spec.build(8.0);
  EXPECT_DOUBLE_EQ(g.min, 1e-3);
  EXPECT_DOUBLE_EQ(g.max, 2.0);
  EXPECT_EQ(g.size(), 11u);
}

TEST(Replicate, EfficiencyBoundedAndFailuresFlagged) {
  auto problem = std::make_shared<const ProblemInstance>(make_problem("i_laplace", 3, 32));
  const auto cell = make_cell(problem, {});
  ReplicateOptions o;
  o.rules = small_config().rules;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto out = run_replicate(cell, 10.0, 1, r, o);
    ASSERT_EQ(out.rules.size(), o.rules.size());
    EXPECT_LE(out.oracle_error, out.grid_oracle_error);
    for (const auto& ro : out.rules) {
      EXPECT_GT(ro.efficiency, 0.0) << to_string(ro.rule);
      EXPECT_LE(ro.efficiency, 1.0) << to_string(ro.rule);
      if (!ro.selection) EXPECT_FALSE(ro.flags.empty());
    }
  }
}

TEST(Replicate, SingleRunEqualsDirectEvaluation) {
  StudyConfig c;
  c.problems = {{"deriv2", 0}};
  c.sizes = {32};
  c.xis = {20.0};
  c.rules = {Rule::pro};
  c.replicates = 1;
  c.seed = 5;
  const auto res = run_study(c);
  ASSERT_EQ(res.records.size(), 1u);

  auto problem = std::make_shared<const ProblemInstance>(make_problem("deriv2", 0, 32));
  const auto cell = make_cell(problem, {});
  const auto data = add_noise(*problem, 20.0, 5, 0);
  const auto path = cell.path(data.g);
  const auto sel = pro_estimated(path, data.sigma * data.sigma, true);
  const auto f = path.evaluate(sel.alpha).f_alpha;
  EXPECT_DOUBLE_EQ(res.records[0].alpha, sel.alpha);
  EXPECT_DOUBLE_EQ(res.records[0].rel_error, rel_error(f, problem->f_true));
  ASSERT_EQ(res.summaries.size(), 1u);
  EXPECT_DOUBLE_EQ(res.summaries[0].median_eff, res.records[0].efficiency);
  EXPECT_EQ(res.summaries[0].count, 1u);
}

TEST(Study, RuleOrderDoesNotChangeNumbers) {
  auto c = small_config();
  const auto a = run_study(c);
  std::reverse(c.rules.begin(), c.rules.end());
  const auto b = run_study(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  auto key = [](const StudyRecord& r) {
    return std::make_tuple(r.problem, r.variant, r.n, r.xi, r.replicate, static_cast<int>(r.rule));
  };
  std::map<decltype(key(a.records[0])), StudyRecord> by_key;
  for (const auto& r : a.records) by_key[key(r)] = r;
  for (const auto& r : b.records) {
    const auto& o = by_key.at(key(r));
    EXPECT_EQ(r.alpha, o.alpha);
    EXPECT_EQ(r.rel_error, o.rel_error);
    EXPECT_EQ(r.efficiency, o.efficiency);
    EXPECT_EQ(r.flags, o.flags);
  }
}

TEST(Study, WorkerCountDoesNotChangeOutput) {
  const auto c = small_config();
  const auto one = run_study(c, 1);
  const auto many = run_study(c, 8);
  EXPECT_EQ(records_csv(one.records), records_csv(many.records));
  EXPECT_EQ(summary_csv(one.summaries), summary_csv(many.summaries));
}

TEST(Study, WritesOneCsvPerBlock) {
  auto c = small_config();
  c.sizes = {16, 32};
  c.replicates = 2;
  const auto res = run_study(c, 2);
  const auto dir = std::filesystem::temp_directory_path() / "riskreg_test_study";
  std::filesystem::remove_all(dir);
  const auto files = write_study(res, dir.string());
  EXPECT_EQ(files.size(), 2u * 2u + 1u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const std::string summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "problem,variant,n,xi,rule,median_eff,q1,q3,median_oracle");
  const std::string block = slurp(dir / files.front());
  EXPECT_EQ(block.substr(0, block.find('\n')),
            "problem,variant,n,xi,rule,replicate,alpha,rel_error,efficiency,flags");
  // 2 problems x 8 rules x 2 replicates per block, plus the header.
  EXPECT_EQ(std::count(block.begin(), block.end(), '\n'), 33);
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    EXPECT_NE(e.path().extension(), ".tmp");
  }
  std::filesystem::remove_all(dir);
}

TEST(Study, ValidationNamesTheField) {
  auto c = small_config();
  c.replicates = 0;
  try {
    validate(c);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("replicates"), std::string::npos);
  }
  c = small_config();
  c.problems = {{"heat", 2}};
  EXPECT_THROW(validate(c), InputError);
  c = small_config();
  c.xis.clear();
  EXPECT_THROW(validate(c), InputError);
}

TEST(Config, RoundTrip) {
  auto c = small_config();
  c.grid.min_factor = 1e-10;
  c.grid.points = 50;
  c.bp.c = 2.0;
  c.ipro.alpha_init = 1e-3;
  c.matrix_free = true;
  c.probes = 12;
  const auto text = to_json(c);
  const auto back = parse_study_config(text);
  EXPECT_EQ(to_json(back), text);
  EXPECT_EQ(back.problems.size(), 2u);
  EXPECT_EQ(back.problems[1].variant, 5);
  EXPECT_EQ(back.grid.points, 50);
  EXPECT_FALSE(back.grid.max.has_value());
  EXPECT_EQ(back.ipro.alpha_init, 1e-3);
}

TEST(Config, Minimal) {
  const auto c = parse_study_config(
      R"({"version": 1, "problems": ["shaw", {"name": "heat"}], "sizes": [32], "xi": [10], "rules": ["pro"]})");
  EXPECT_EQ(c.problems[1].variant, 1);
  EXPECT_EQ(c.replicates, 100);
  EXPECT_EQ(c.seed, 0u);
}

TEST(Config, Rejections) {
  const char* bad[] = {
      "not json",
      R"({"problems": ["shaw"], "sizes": [32], "xi": [10], "rules": ["pro"]})",
      R"({"version": 2, "problems": ["shaw"], "sizes": [32], "xi": [10], "rules": ["pro"]})",
      R"({"version": 1, "problems": ["shaw"], "sizes": [32], "xi": [10], "rules": ["pro"], "replicate": 3})",
      R"({"version": 1, "problems": ["nope"], "sizes": [32], "xi": [10], "rules": ["pro"]})",
      R"({"version": 1, "problems": ["shaw"], "sizes": [32], "xi": [10], "rules": ["hr"]})",
      R"({"version": 1, "problems": ["shaw"], "sizes": [8], "xi": [10], "rules": ["pro"]})",
      R"({"version": 1, "problems": ["shaw"], "sizes": [32], "xi": [10], "rules": ["pro"], "grid": {"pts": 3}})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_study_config(text), InputError) << text;
}

TEST(Curves, LowerBoundMatchesRiskModule) {
  auto problem = std::make_shared<const ProblemInstance>(make_problem("shaw", 0, 32));
  const auto cell = make_cell(problem, {});
  const auto data = add_noise(*problem, 20.0, 1, 0);
  const auto path = cell.path(data.g);
  const double rho2 = problem->g_true.squaredNorm();
  const auto curve = sample_curve(CurveKind::lower_bound, cell, path, data.sigma, rho2);
  ASSERT_EQ(curve.alphas.size(), cell.grid.size());
  for (std::size_t k = 0; k < curve.alphas.size(); k += 17) {
    EXPECT_DOUBLE_EQ(curve.values[k],
                     lower_bound_T(rho2, data.sigma * data.sigma, *cell.dec, curve.alphas[k]));
  }
  const auto pred = sample_curve(CurveKind::predictive, cell, path, data.sigma, std::nullopt);
  for (std::size_t k = 0; k < pred.alphas.size(); ++k) EXPECT_LE(curve.values[k], pred.values[k] * (1 + 1e-12));
}

TEST(Curves, PredictiveNeedsTruth) {
  auto p = make_problem("shaw", 0, 32);
  p.f_true.resize(0);
  auto problem = std::make_shared<const ProblemInstance>(std::move(p));
  const auto cell = make_cell(problem, {});
  const auto path = cell.path(problem->g_true);
  EXPECT_THROW(sample_curve(CurveKind::predictive, cell, path, 0.1, std::nullopt), DegenerateError);
  EXPECT_THROW(sample_curve(CurveKind::upre, cell, path, std::nullopt, std::nullopt), InputError);
  EXPECT_THROW(curve_from_string("spline"), InputError);
}
