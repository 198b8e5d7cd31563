#include "riskreg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "riskreg/error.hpp"

namespace riskreg {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

StudyConfig parse_study_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: not valid JSON: ") + e.what());
  }
  StudyConfig c;
  try {
    check_keys(j, {"version", "problems", "sizes", "xi", "rules", "replicates", "seed", "grid",
                   "matrix_free", "probes", "solve_tol", "bp", "ipro"},
               "config");
    if (!j.contains("version")) throw InputError("config: missing 'version'");
    c.version = j.at("version").get<int>();
    if (c.version != kConfigVersion) {
      throw InputError("config: unsupported version " + std::to_string(c.version));
    }
    for (const auto& p : j.at("problems")) {
      ProblemSpec spec;
      if (p.is_string()) {
        spec.name = p.get<std::string>();
        spec.variant = default_variant(spec.name);
      } else {
        check_keys(p, {"name", "variant"}, "problems");
        spec.name = p.at("name").get<std::string>();
        spec.variant = p.contains("variant") ? p.at("variant").get<int>() : default_variant(spec.name);
      }
      c.problems.push_back(spec);
    }
    c.sizes = j.at("sizes").get<std::vector<Index>>();
    c.xis = j.at("xi").get<std::vector<double>>();
    for (const auto& r : j.at("rules")) c.rules.push_back(rule_from_string(r.get<std::string>()));
    read_opt(j, "replicates", c.replicates);
    read_opt(j, "seed", c.seed);
    read_opt(j, "matrix_free", c.matrix_free);
    read_opt(j, "probes", c.probes);
    read_opt(j, "solve_tol", c.solve_tol);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      check_keys(g, {"min", "max", "min_factor", "max_factor", "points"}, "grid");
      read_opt(g, "min", c.grid.min);
      read_opt(g, "max", c.grid.max);
      read_opt(g, "min_factor", c.grid.min_factor);
      read_opt(g, "max_factor", c.grid.max_factor);
      read_opt(g, "points", c.grid.points);
    }
    if (j.contains("bp")) {
      const auto& b = j.at("bp");
      check_keys(b, {"gamma", "c"}, "bp");
      read_opt(b, "gamma", c.bp.gamma);
      read_opt(b, "c", c.bp.c);
    }
    if (j.contains("ipro")) {
      const auto& b = j.at("ipro");
      check_keys(b, {"alpha_init", "eps", "abs_floor", "max_iter"}, "ipro");
      read_opt(b, "alpha_init", c.ipro.alpha_init);
      read_opt(b, "eps", c.ipro.eps);
      read_opt(b, "abs_floor", c.ipro.abs_floor);
      read_opt(b, "max_iter", c.ipro.max_iter);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str());
}

std::string to_json(const StudyConfig& c) {
  json j;
  j["version"] = c.version;
  json problems = json::array();
  for (const auto& p : c.problems) problems.push_back({{"name", p.name}, {"variant", p.variant}});
  j["problems"] = problems;
  j["sizes"] = c.sizes;
  j["xi"] = c.xis;
  json rules = json::array();
  for (Rule r : c.rules) rules.push_back(to_string(r));
  j["rules"] = rules;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["grid"] = {{"min", opt_json(c.grid.min)},
               {"max", opt_json(c.grid.max)},
               {"min_factor", opt_json(c.grid.min_factor)},
               {"max_factor", opt_json(c.grid.max_factor)},
               {"points", opt_json(c.grid.points)}};
  j["matrix_free"] = c.matrix_free;
  j["probes"] = c.probes;
  j["solve_tol"] = c.solve_tol;
  j["bp"] = {{"gamma", c.bp.gamma}, {"c", c.bp.c}};
  j["ipro"] = {{"alpha_init", opt_json(c.ipro.alpha_init)},
               {"eps", c.ipro.eps},
               {"abs_floor", c.ipro.abs_floor},
               {"max_iter", c.ipro.max_iter}};
  return j.dump(2) + "\n";
}

}  // namespace riskreg
