// riskreg command-line frontend. Talks to the library only through riskreg.h.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskreg/riskreg.h"

namespace {

constexpr int kUsage = 2;

struct ProblemFree {
  void operator()(rr_problem* p) const { rr_problem_free(p); }
};
struct OptionsFree {
  void operator()(rr_options* o) const { rr_options_free(o); }
};
using ProblemPtr = std::unique_ptr<rr_problem, ProblemFree>;
using OptionsPtr = std::unique_ptr<rr_options, OptionsFree>;

struct Failure {
  int code;
};

void check(rr_status s) {
  if (s == RR_OK) return;
  std::cerr << "riskreg: " << rr_last_error() << "\n";
  throw Failure{s == RR_ERR_INTERNAL ? 1 : static_cast<int>(s)};
}

std::string take(char* s) {
  std::string out(s ? s : "");
  rr_string_free(s);
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RISKREG_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    std::cerr << "riskreg: RISKREG_SEED is not an unsigned integer\n";
    throw Failure{kUsage};
  }
  return 0;
}

struct GridFlags {
  double min = 0.0;
  double max = 0.0;
  int points = 0;
};

struct SolverFlags {
  std::optional<double> sigma;
  bool known_sigma = false;
  std::optional<double> rho2;
  GridFlags grid;
  bool matrix_free = false;
  int probes = 20;
  std::optional<std::uint64_t> seed;
  double solve_tol = 1e-8;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--sigma", f.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--known-sigma", f.known_sigma, "Use the noise level recorded in the data file");
  cmd->add_option("--rho2", f.rho2, "Squared norm of the exact data (pro, lower_bound)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--grid-min", f.grid.min, "Smallest alpha (default 1e-12 s1^2)");
  cmd->add_option("--grid-max", f.grid.max, "Largest alpha (default s1^2 / 2)");
  cmd->add_option("--grid-points", f.grid.points, "Number of grid points (default 200)");
  cmd->add_flag("--matrix-free", f.matrix_free, "Power method and stochastic influence estimates");
  cmd->add_option("--probes", f.probes, "Probe vectors for the stochastic estimates")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed for probes and start vectors (default $RISKREG_SEED or 0)");
  cmd->add_option("--solve-tol", f.solve_tol, "Relative tolerance of the Krylov solves");
}

OptionsPtr build_options(const SolverFlags& f, const std::string& info_json) {
  rr_options* raw = nullptr;
  check(rr_options_create(&raw));
  OptionsPtr o(raw);
  std::optional<double> sigma = f.sigma;
  if (!sigma && f.known_sigma) {
    const auto info = nlohmann::json::parse(info_json);
    if (!info.contains("sigma") || info["sigma"].is_null()) {
      std::cerr << "riskreg: --known-sigma given but the data file records no noise level\n";
      throw Failure{kUsage};
    }
    sigma = info["sigma"].get<double>();
  }
  if (sigma) check(rr_options_set_sigma(o.get(), *sigma));
  if (f.rho2) check(rr_options_set_rho2(o.get(), *f.rho2));
  check(rr_options_set_grid(o.get(), f.grid.min, f.grid.max, f.grid.points));
  check(rr_options_set_matrix_free(o.get(), f.matrix_free ? 1 : 0));
  check(rr_options_set_probes(o.get(), f.probes));
  check(rr_options_set_seed(o.get(), resolve_seed(f.seed)));
  check(rr_options_set_solve_tol(o.get(), f.solve_tol));
  return o;
}

ProblemPtr load(const std::string& path, std::string& info) {
  rr_problem* raw = nullptr;
  check(rr_problem_load(path.c_str(), &raw));
  ProblemPtr p(raw);
  char* s = nullptr;
  check(rr_problem_info(p.get(), &s));
  info = take(s);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "riskreg: cannot read '" << path << "'\n";
    throw Failure{kUsage};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tikhonov regularization parameter selection"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a problem container with one noisy data vector");
  std::string g_problem, g_out;
  int g_variant = -1;
  std::int64_t g_n = 64;
  std::optional<double> g_xi, g_sigma;
  std::optional<std::uint64_t> g_seed;
  std::uint64_t g_replicate = 0;
  gen->add_option("--problem", g_problem, "Problem name")->required();
  gen->add_option("--variant", g_variant, "heat kappa or i_laplace case");
  gen->add_option("--n", g_n, "Problem size (cells per side for parallel_tomo)");
  auto* xi_opt = gen->add_option("--xi", g_xi, "Signal-to-noise ratio in dB");
  gen->add_option("--sigma", g_sigma, "Noise standard deviation")->excludes(xi_opt);
  gen->add_option("--seed", g_seed, "Noise seed (default $RISKREG_SEED or 0)");
  gen->add_option("--replicate", g_replicate, "Replicate index of the noise draw");
  gen->add_option("--out", g_out, "Output container path")->required();

  // select
  auto* sel = app.add_subcommand("select", "Select alpha with one rule; JSON on stdout");
  std::string s_data, s_rule;
  SolverFlags s_flags;
  bool s_fallback = false;
  double s_bp_gamma = 0.25, s_bp_c = 1.5;
  double s_ipro_init = 0.0, s_ipro_eps = 1e-16;
  int s_ipro_max = 100;
  sel->add_option("--data", s_data, "Container with noisy data")->required();
  sel->add_option("--rule", s_rule, "pro, ipro, dp, upre, bp, gcv, lc or qoc")->required();
  add_solver_flags(sel, s_flags);
  sel->add_flag("--pro-fallback", s_fallback, "pro: use the largest alpha when the SNR estimate fails");
  sel->add_option("--bp-gamma", s_bp_gamma, "bp: subgrid ratio");
  sel->add_option("--bp-c", s_bp_c, "bp: balancing constant");
  sel->add_option("--ipro-init", s_ipro_init, "ipro: starting alpha (default grid midpoint)");
  sel->add_option("--ipro-eps", s_ipro_eps, "ipro: relative stopping tolerance");
  sel->add_option("--ipro-max-iter", s_ipro_max, "ipro: iteration limit");

  // study
  auto* study = app.add_subcommand("study", "Run a replicate study from a JSON config");
  std::string st_config, st_out;
  int st_workers = 1;
  std::optional<int> st_replicates;
  std::optional<std::uint64_t> st_seed;
  study->add_option("--config", st_config, "Study config (JSON)")->required();
  study->add_option("--out", st_out, "Output directory")->required();
  study->add_option("--workers", st_workers, "Worker threads")->check(CLI::PositiveNumber);
  study->add_option("--replicates", st_replicates, "Override the replicate count")
      ->check(CLI::PositiveNumber);
  study->add_option("--seed", st_seed, "Override the seed");

  // curve
  auto* curve = app.add_subcommand("curve", "Sample a curve on the alpha grid as CSV");
  std::string c_data, c_kind, c_out;
  SolverFlags c_flags;
  curve->add_option("--data", c_data, "Container with noisy data")->required();
  curve->add_option("--kind", c_kind, "predictive, lower_bound, upre, gcv or lcurve")->required();
  add_solver_flags(curve, c_flags);
  curve->add_option("--out", c_out, "Output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      if (!g_xi && !g_sigma) {
        std::cerr << "riskreg: generate needs --xi or --sigma\n";
        return kUsage;
      }
      rr_problem* raw = nullptr;
      check(rr_problem_create(g_problem.c_str(), g_variant, g_n, &raw));
      ProblemPtr p(raw);
      const std::uint64_t seed = resolve_seed(g_seed);
      if (g_xi) {
        check(rr_problem_add_noise(p.get(), *g_xi, seed, g_replicate));
      } else {
        check(rr_problem_add_noise_sigma(p.get(), *g_sigma, seed, g_replicate));
      }
      check(rr_problem_save(p.get(), g_out.c_str()));
      char* s = nullptr;
      check(rr_problem_info(p.get(), &s));
      auto info = nlohmann::json::parse(take(s));
      nlohmann::json out{{"out", g_out},     {"problem", info["name"]}, {"variant", info["variant"]},
                         {"n", info["n"]},   {"m", info["m"]},          {"sigma", info["sigma"]},
                         {"xi", info["xi"]}, {"rho", info["rho"]},      {"seed", seed},
                         {"replicate", g_replicate}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (*sel) {
      std::string info;
      ProblemPtr p = load(s_data, info);
      OptionsPtr o = build_options(s_flags, info);
      check(rr_options_set_pro_fallback(o.get(), s_fallback ? 1 : 0));
      check(rr_options_set_bp(o.get(), s_bp_gamma, s_bp_c));
      check(rr_options_set_ipro(o.get(), s_ipro_init, s_ipro_eps, s_ipro_max));
      char* s = nullptr;
      check(rr_select(p.get(), s_rule.c_str(), o.get(), &s));
      std::cout << take(s) << "\n";
      return 0;
    }

    if (*study) {
      std::string text = read_file(st_config);
      // Flags override the config; RISKREG_SEED only fills a missing seed.
      nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
      if (j.is_object()) {
        if (st_replicates) j["replicates"] = *st_replicates;
        if (st_seed) j["seed"] = *st_seed;
        if (!j.contains("seed") && std::getenv("RISKREG_SEED")) j["seed"] = resolve_seed(std::nullopt);
        text = j.dump();
      }
      // Validate before touching the output directory so a bad config leaves nothing behind.
      check(rr_study_validate(text.c_str()));
      char* s = nullptr;
      check(rr_study_run(text.c_str(), st_workers, st_out.c_str(), &s));
      std::cout << take(s) << "\n";
      return 0;
    }

    if (*curve) {
      std::string info;
      ProblemPtr p = load(c_data, info);
      OptionsPtr o = build_options(c_flags, info);
      char* s = nullptr;
      check(rr_curve(p.get(), c_kind.c_str(), o.get(), &s));
      const std::string csv = take(s);
      if (c_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(c_out, std::ios::trunc);
        if (!out || !(out << csv)) {
          std::cerr << "riskreg: cannot write '" << c_out << "'\n";
          return kUsage;
        }
      }
      return 0;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kUsage;
}
