#include "riskreg/riskreg.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "riskreg/bench.hpp"
#include "riskreg/config.hpp"
#include "riskreg/container.hpp"
#include "riskreg/error.hpp"
#include "riskreg/risk.hpp"
#include "riskreg/rules.hpp"

struct rr_problem {
  std::shared_ptr<const riskreg::ProblemInstance> problem;
  std::optional<riskreg::NoisyData> data;
  bool has_f_true = true;
  bool sigma_known = false;
};

struct rr_options {
  std::optional<double> sigma;
  std::optional<double> rho2;
  riskreg::GridSpec grid;
  bool matrix_free = false;
  int probes = 20;
  std::uint64_t seed = 0;
  double solve_tol = 1e-8;
  bool pro_fallback = false;
  riskreg::BpOptions bp;
  riskreg::IproOptions ipro;
};

namespace {

thread_local std::string g_last_error;

rr_status fail(rr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions to status codes; the message stays readable via rr_last_error().
template <typename Fn>
rr_status guard(Fn&& fn) {
  try {
    fn();
    return RR_OK;
  } catch (const riskreg::Error& e) {
    return fail(static_cast<rr_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RR_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw riskreg::InputError(std::string(what) + " must not be null");
}

riskreg::CellContext make_cell_for(const rr_problem& p, const rr_options& o) {
  riskreg::CellOptions co;
  co.matrix_free = o.matrix_free;
  co.probes = o.probes;
  co.seed = o.seed;
  co.solve_tol = o.solve_tol;
  co.grid = o.grid;
  return riskreg::make_cell(p.problem, co);
}

const riskreg::NoisyData& data_of(const rr_problem& p) {
  if (!p.data) throw riskreg::InputError("problem has no noisy data");
  return *p.data;
}

}  // namespace

extern "C" {

const char* rr_version(void) { return "0.1.0"; }

const char* rr_last_error(void) { return g_last_error.c_str(); }

void rr_string_free(char* s) { std::free(s); }

rr_status rr_problem_create(const char* name, int variant, int64_t n, rr_problem** out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    auto p = std::make_unique<rr_problem>();
    if (variant < 0) variant = riskreg::default_variant(name);
    p->problem = std::make_shared<const riskreg::ProblemInstance>(riskreg::make_problem(name, variant, n));
    *out = p.release();
  });
}

rr_status rr_problem_from_dense(const char* name, int64_t rows, int64_t cols, const double* a,
                                const double* f_true, const double* g_true, rr_problem** out) {
  return guard([&] {
    require(a, "a");
    require(out, "out");
    if (rows < 1 || cols < 1) throw riskreg::InputError("dimensions must be positive");
    if (!f_true && !g_true) throw riskreg::InputError("need f_true or g_true");
    riskreg::Matrix m = Eigen::Map<const riskreg::Matrix>(a, rows, cols);
    if (!m.allFinite()) throw riskreg::InputError("matrix has non-finite entries");
    riskreg::Vector f = f_true ? riskreg::Vector(Eigen::Map<const riskreg::Vector>(f_true, cols))
                               : riskreg::Vector();
    riskreg::Vector g = g_true ? riskreg::Vector(Eigen::Map<const riskreg::Vector>(g_true, rows))
                               : riskreg::Vector(m * f);
    auto p = std::make_unique<rr_problem>();
    p->has_f_true = f_true != nullptr;
    p->problem = std::make_shared<const riskreg::ProblemInstance>(riskreg::ProblemInstance{
        name ? name : "dense", 0, riskreg::LinearOperator::dense(std::move(m)), std::move(f),
        std::move(g), std::nullopt});
    *out = p.release();
  });
}

rr_status rr_problem_load(const char* path, rr_problem** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    riskreg::Container c = riskreg::read_container(path);
    auto p = std::make_unique<rr_problem>();
    p->has_f_true = c.has_f_true;
    p->data = std::move(c.data);
    p->sigma_known = p->data.has_value();
    p->problem = std::make_shared<const riskreg::ProblemInstance>(std::move(c.problem));
    *out = p.release();
  });
}

void rr_problem_free(rr_problem* p) { delete p; }

rr_status rr_problem_save(const rr_problem* p, const char* path) {
  return guard([&] {
    require(p, "problem");
    require(path, "path");
    riskreg::write_container(path, *p->problem, p->data ? &*p->data : nullptr, p->has_f_true);
  });
}

rr_status rr_problem_dims(const rr_problem* p, int64_t* rows, int64_t* cols) {
  return guard([&] {
    require(p, "problem");
    if (rows) *rows = p->problem->rows();
    if (cols) *cols = p->problem->cols();
  });
}

rr_status rr_problem_vector(const rr_problem* p, rr_vector which, double* buf, int64_t len) {
  return guard([&] {
    require(p, "problem");
    require(buf, "buf");
    const riskreg::Vector* v = nullptr;
    switch (which) {
      case RR_VECTOR_F_TRUE:
        if (!p->has_f_true) throw riskreg::InputError("problem has no f_true");
        v = &p->problem->f_true;
        break;
      case RR_VECTOR_G_TRUE: v = &p->problem->g_true; break;
      case RR_VECTOR_G: v = &data_of(*p).g; break;
      default: throw riskreg::InputError("unknown vector");
    }
    if (len != v->size()) throw riskreg::InputError("buffer length does not match vector length");
    std::memcpy(buf, v->data(), static_cast<std::size_t>(len) * sizeof(double));
  });
}

rr_status rr_problem_info(const rr_problem* p, char** json_out) {
  return guard([&] {
    require(p, "problem");
    require(json_out, "json_out");
    nlohmann::json j;
    j["name"] = p->problem->name;
    j["variant"] = p->problem->variant;
    j["n"] = p->problem->rows();
    j["m"] = p->problem->cols();
    j["has_f_true"] = p->has_f_true;
    j["has_data"] = p->data.has_value();
    j["rho"] = p->problem->g_true.norm();
    if (p->data) {
      j["sigma"] = p->sigma_known ? nlohmann::json(p->data->sigma) : nlohmann::json(nullptr);
      j["xi"] = std::isfinite(p->data->xi) ? nlohmann::json(p->data->xi) : nlohmann::json(nullptr);
      j["seed"] = p->data->seed;
      j["replicate"] = p->data->replicate;
    }
    *json_out = dup_string(j.dump());
  });
}

rr_status rr_problem_add_noise(rr_problem* p, double xi, uint64_t seed, uint64_t replicate) {
  return guard([&] {
    require(p, "problem");
    p->data = riskreg::add_noise(*p->problem, xi, seed, replicate);
    p->sigma_known = true;
  });
}

rr_status rr_problem_add_noise_sigma(rr_problem* p, double sigma, uint64_t seed, uint64_t replicate) {
  return guard([&] {
    require(p, "problem");
    p->data = riskreg::add_noise_sigma(*p->problem, sigma, seed, replicate);
    p->sigma_known = true;
  });
}

rr_status rr_problem_set_data(rr_problem* p, const double* g, int64_t len, double sigma) {
  return guard([&] {
    require(p, "problem");
    require(g, "g");
    if (len != p->problem->rows()) throw riskreg::InputError("data length does not match rows");
    riskreg::NoisyData d;
    d.g = Eigen::Map<const riskreg::Vector>(g, len);
    if (!d.g.allFinite()) throw riskreg::InputError("data has non-finite entries");
    p->sigma_known = sigma >= 0.0;
    d.sigma = p->sigma_known ? sigma : 0.0;
    d.xi = p->sigma_known && sigma > 0.0
               ? riskreg::snr_db(p->problem->g_true.squaredNorm(), sigma * sigma, len)
               : std::numeric_limits<double>::quiet_NaN();
    p->data = std::move(d);
  });
}

rr_status rr_options_create(rr_options** out) {
  return guard([&] {
    require(out, "out");
    *out = new rr_options();
  });
}

void rr_options_free(rr_options* o) { delete o; }

rr_status rr_options_set_sigma(rr_options* o, double sigma) {
  return guard([&] {
    require(o, "options");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw riskreg::InputError("sigma must be non-negative");
    o->sigma = sigma;
  });
}

rr_status rr_options_set_rho2(rr_options* o, double rho2) {
  return guard([&] {
    require(o, "options");
    if (!(rho2 > 0.0) || !std::isfinite(rho2)) throw riskreg::InputError("rho2 must be positive");
    o->rho2 = rho2;
  });
}

rr_status rr_options_set_grid(rr_options* o, double min, double max, int points) {
  return guard([&] {
    require(o, "options");
    if (min > 0.0) o->grid.min = min; else o->grid.min.reset();
    if (max > 0.0) o->grid.max = max; else o->grid.max.reset();
    if (points > 0) {
      if (points < 3) throw riskreg::InputError("grid needs at least 3 points");
      o->grid.points = points;
    } else {
      o->grid.points.reset();
    }
    if (o->grid.min && o->grid.max && !(*o->grid.max > *o->grid.min)) {
      throw riskreg::InputError("grid needs min < max");
    }
  });
}

rr_status rr_options_set_matrix_free(rr_options* o, int enabled) {
  return guard([&] {
    require(o, "options");
    o->matrix_free = enabled != 0;
  });
}

rr_status rr_options_set_probes(rr_options* o, int probes) {
  return guard([&] {
    require(o, "options");
    if (probes < 1) throw riskreg::InputError("probes must be at least 1");
    o->probes = probes;
  });
}

rr_status rr_options_set_seed(rr_options* o, uint64_t seed) {
  return guard([&] {
    require(o, "options");
    o->seed = seed;
  });
}

rr_status rr_options_set_solve_tol(rr_options* o, double tol) {
  return guard([&] {
    require(o, "options");
    if (!(tol > 0.0 && tol < 1.0)) throw riskreg::InputError("solve tolerance must be in (0, 1)");
    o->solve_tol = tol;
  });
}

rr_status rr_options_set_pro_fallback(rr_options* o, int enabled) {
  return guard([&] {
    require(o, "options");
    o->pro_fallback = enabled != 0;
  });
}

rr_status rr_options_set_bp(rr_options* o, double gamma, double c) {
  return guard([&] {
    require(o, "options");
    if (!(gamma > 0.0 && gamma < 1.0)) throw riskreg::InputError("bp gamma must be in (0, 1)");
    if (!(c > 0.0)) throw riskreg::InputError("bp c must be positive");
    o->bp = riskreg::BpOptions{gamma, c};
  });
}

rr_status rr_options_set_ipro(rr_options* o, double alpha_init, double eps, int max_iter) {
  return guard([&] {
    require(o, "options");
    if (!(eps >= 0.0)) throw riskreg::InputError("ipro eps must be non-negative");
    if (max_iter < 1) throw riskreg::InputError("ipro max_iter must be at least 1");
    if (alpha_init > 0.0) o->ipro.alpha_init = alpha_init; else o->ipro.alpha_init.reset();
    o->ipro.eps = eps;
    o->ipro.max_iter = max_iter;
  });
}

rr_status rr_select(const rr_problem* p, const char* rule, const rr_options* o, char** json_out) {
  return guard([&] {
    require(p, "problem");
    require(rule, "rule");
    require(json_out, "json_out");
    const rr_options defaults;
    const rr_options& opt = o ? *o : defaults;
    const riskreg::Rule r = riskreg::rule_from_string(rule);
    if (riskreg::needs_sigma(r) && !opt.sigma) {
      throw riskreg::InputError(std::string("rule '") + rule + "' requires sigma");
    }
    const riskreg::NoisyData& data = data_of(*p);
    const riskreg::CellContext cell = make_cell_for(*p, opt);
    const riskreg::SolutionPath path = cell.path(data.g);
    riskreg::RuleParams params;
    params.sigma = opt.sigma;
    params.rho2 = opt.rho2;
    params.pro_fallback = opt.pro_fallback;
    params.bp = opt.bp;
    params.ipro = opt.ipro;
    *json_out = dup_string(riskreg::to_json(riskreg::select(r, path, params)));
  });
}

rr_status rr_curve(const rr_problem* p, const char* kind, const rr_options* o, char** csv_out) {
  return guard([&] {
    require(p, "problem");
    require(kind, "kind");
    require(csv_out, "csv_out");
    const rr_options defaults;
    const rr_options& opt = o ? *o : defaults;
    const riskreg::CurveKind k = riskreg::curve_from_string(kind);
    if (k == riskreg::CurveKind::predictive && !p->has_f_true) {
      throw riskreg::DegenerateError("predictive curve requires f_true in the problem");
    }
    const riskreg::NoisyData& data = data_of(*p);
    const riskreg::CellContext cell = make_cell_for(*p, opt);
    const riskreg::SolutionPath path = cell.path(data.g);
    std::ostringstream os;
    riskreg::write_csv(os, riskreg::sample_curve(k, cell, path, opt.sigma, opt.rho2));
    *csv_out = dup_string(os.str());
  });
}

rr_status rr_study_validate(const char* config_json) {
  return guard([&] {
    require(config_json, "config");
    riskreg::parse_study_config(config_json);
  });
}

rr_status rr_study_run(const char* config_json, int workers, const char* out_dir,
                       char** manifest_out) {
  return guard([&] {
    require(config_json, "config");
    require(out_dir, "out_dir");
    if (workers < 1) throw riskreg::InputError("workers must be at least 1");
    const riskreg::StudyConfig config = riskreg::parse_study_config(config_json);
    const riskreg::StudyResult result = riskreg::run_study(config, workers);
    const auto files = riskreg::write_study(result, out_dir);
    if (manifest_out) *manifest_out = dup_string(nlohmann::json(files).dump());
  });
}

}  // extern "C"
