#include "riskreg/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "riskreg/error.hpp"

namespace riskreg {

namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes little-endian");

constexpr char kMagic[8] = {'R', 'I', 'S', 'K', 'R', 'E', 'G', '\0'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_doubles(std::ostream& out, const double* p, Index count) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::istream& in, double* p, Index count) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw InputError("container: truncated data block");
}

nlohmann::json geometry_json(const TomoGeometry& g) {
  return {{"cells", g.cells}, {"angles_deg", g.angles()}, {"rays", g.rays}, {"span", g.ray_span()}};
}

TomoGeometry geometry_from(const nlohmann::json& j) {
  TomoGeometry g;
  g.cells = j.at("cells").get<int>();
  g.angles_deg = j.at("angles_deg").get<std::vector<double>>();
  g.rays = j.at("rays").get<int>();
  g.span = j.at("span").get<double>();
  return g;
}

}  // namespace

void write_container(const std::string& path, const ProblemInstance& p, const NoisyData* data,
                     bool include_f_true) {
  const bool dense = !p.tomo;
  if (dense && !p.a.dense_matrix()) throw InputError("container: operator is neither dense nor generated");

  nlohmann::json h;
  h["name"] = p.name;
  h["variant"] = p.variant;
  h["n"] = p.rows();
  h["m"] = p.cols();
  h["kind"] = dense ? "dense" : "generated";
  if (!dense) h["geometry"] = geometry_json(*p.tomo);
  nlohmann::json blocks = nlohmann::json::array();
  if (dense) blocks.push_back({{"name", "A"}, {"rows", p.rows()}, {"cols", p.cols()}});
  if (include_f_true) blocks.push_back({{"name", "f_true"}, {"length", p.cols()}});
  blocks.push_back({{"name", "g_true"}, {"length", p.rows()}});
  if (data) {
    const auto xi = std::isfinite(data->xi) ? nlohmann::json(data->xi) : nlohmann::json(nullptr);
    h["noise"] = {{"sigma", data->sigma}, {"xi", xi}, {"seed", data->seed}, {"replicate", data->replicate}};
    blocks.push_back({{"name", "g"}, {"length", p.rows()}});
  }
  h["blocks"] = blocks;
  const std::string header = h.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("container: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kContainerVersion);
  write_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (dense) write_doubles(out, p.a.dense_matrix()->data(), p.a.dense_matrix()->size());
  if (include_f_true) write_doubles(out, p.f_true.data(), p.f_true.size());
  write_doubles(out, p.g_true.data(), p.g_true.size());
  if (data) write_doubles(out, data->g.data(), data->g.size());
  if (!out) throw InputError("container: write to '" + path + "' failed");
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("container: cannot open '" + path + "'");
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw InputError("container: '" + path + "' is not a riskreg container");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kContainerVersion) {
    throw InputError("container: unsupported version " + std::to_string(version));
  }
  const std::uint32_t len = read_u32(in);
  std::string header(len, '\0');
  in.read(header.data(), len);
  if (!in) throw InputError("container: truncated header");

  try {
    const auto h = nlohmann::json::parse(header);
    const auto name = h.at("name").get<std::string>();
    const int variant = h.at("variant").get<int>();
    const Index n = h.at("n").get<Index>();
    const Index m = h.at("m").get<Index>();
    const auto kind = h.at("kind").get<std::string>();

    std::optional<Matrix> a;
    std::optional<TomoGeometry> geo;
    Vector f, g_true, g;
    bool has_f = false;
    bool has_g = false;
    for (const auto& b : h.at("blocks")) {
      const auto bname = b.at("name").get<std::string>();
      if (bname == "A") {
        if (b.at("rows").get<Index>() != n || b.at("cols").get<Index>() != m) {
          throw InputError("container: block A has inconsistent shape");
        }
        a.emplace(n, m);
        read_doubles(in, a->data(), n * m);
        continue;
      }
      const Index length = b.at("length").get<Index>();
      Vector* target = nullptr;
      if (bname == "f_true") { target = &f; has_f = true; }
      else if (bname == "g_true") target = &g_true;
      else if (bname == "g") { target = &g; has_g = true; }
      else throw InputError("container: unknown block '" + bname + "'");
      target->resize(length);
      read_doubles(in, target->data(), length);
    }
    if (g_true.size() != n) throw InputError("container: missing or misshapen g_true");

    ProblemInstance p = [&]() -> ProblemInstance {
      if (kind == "dense") {
        if (!a) throw InputError("container: dense container without block A");
        return ProblemInstance{name, variant, LinearOperator::dense(std::move(*a)), Vector{}, g_true,
                               std::nullopt};
      }
      if (kind == "generated") {
        geo = geometry_from(h.at("geometry"));
        ProblemInstance t = parallel_tomo(*geo);
        if (t.rows() != n || t.cols() != m) throw InputError("container: geometry does not match n, m");
        t.g_true = g_true;
        return t;
      }
      throw InputError("container: unknown kind '" + kind + "'");
    }();
    if (has_f) {
      if (f.size() != m) throw InputError("container: f_true has wrong length");
      p.f_true = std::move(f);
    } else {
      p.f_true.resize(0);
    }

    Container c{std::move(p), has_f, std::nullopt};
    if (has_g) {
      if (g.size() != n) throw InputError("container: g has wrong length");
      const auto& noise = h.at("noise");
      NoisyData d;
      d.g = std::move(g);
      d.sigma = noise.at("sigma").get<double>();
      d.xi = noise.at("xi").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                       : noise.at("xi").get<double>();
      d.seed = noise.at("seed").get<std::uint64_t>();
      d.replicate = noise.at("replicate").get<std::uint64_t>();
      c.data = std::move(d);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("container: bad header: ") + e.what());
  }
}

}  // namespace riskreg
