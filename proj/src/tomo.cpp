#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "riskreg/error.hpp"
#include "riskreg/problems.hpp"

namespace riskreg {

SparseMatrix parallel_tomo_matrix(const TomoGeometry& geo) {
  if (geo.cells < 1) throw InputError("parallel_tomo: need at least one cell per side");
  if (geo.rays < 1) throw InputError("parallel_tomo: need at least one ray per angle");
  const std::vector<double> angles = geo.angles();
  if (angles.empty()) throw InputError("parallel_tomo: need at least one angle");

  const int l = geo.cells;
  const double half = 0.5 * l;
  const double span = geo.ray_span();
  const int p = geo.rays;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(angles.size()) * p * 2 * l);
  std::vector<double> ts;
  ts.reserve(2 * static_cast<std::size_t>(l) + 2);

  Index row = 0;
  for (double deg : angles) {
    const double th = deg * std::numbers::pi / 180.0;
    const double c = std::cos(th);
    const double s = std::sin(th);
    for (int k = 0; k < p; ++k, ++row) {
      const double off = p == 1 ? 0.0 : -0.5 * span + span * k / (p - 1);
      // Ray: (off c, off s) + t (-s, c).
      const double x0 = off * c;
      const double y0 = off * s;
      const double dx = -s;
      const double dy = c;

      // Parameter interval inside the square.
      double tmin = -std::numeric_limits<double>::infinity();
      double tmax = std::numeric_limits<double>::infinity();
      auto clip = [&](double o, double d) {
        if (std::abs(d) < 1e-15) {
          if (o < -half || o > half) tmin = tmax = 0.0;
          return;
        }
        double a = (-half - o) / d;
        double b = (half - o) / d;
        if (a > b) std::swap(a, b);
        tmin = std::max(tmin, a);
        tmax = std::min(tmax, b);
      };
      clip(x0, dx);
      clip(y0, dy);
      if (!(tmax > tmin)) continue;

      ts.clear();
      ts.push_back(tmin);
      ts.push_back(tmax);
      for (int g = 0; g <= l; ++g) {
        const double line = g - half;
        if (std::abs(dx) >= 1e-15) {
          const double t = (line - x0) / dx;
          if (t > tmin && t < tmax) ts.push_back(t);
        }
        if (std::abs(dy) >= 1e-15) {
          const double t = (line - y0) / dy;
          if (t > tmin && t < tmax) ts.push_back(t);
        }
      }
      std::sort(ts.begin(), ts.end());

      for (std::size_t q = 0; q + 1 < ts.size(); ++q) {
        const double len = ts[q + 1] - ts[q];
        if (len <= 1e-14) continue;
        const double tm = 0.5 * (ts[q] + ts[q + 1]);
        const int ix = std::clamp(static_cast<int>(std::floor(x0 + tm * dx + half)), 0, l - 1);
        const int iy = std::clamp(static_cast<int>(std::floor(y0 + tm * dy + half)), 0, l - 1);
        triplets.emplace_back(row, static_cast<Index>(iy) * l + ix, len);
      }
    }
  }

  SparseMatrix a(static_cast<Index>(angles.size()) * p, static_cast<Index>(l) * l);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

Vector shepp_logan(int cells) {
  if (cells < 1) throw InputError("shepp_logan: need at least one cell per side");
  struct Ellipse {
    double v, a, b, x0, y0, phi;
  };
  static constexpr Ellipse kEllipses[] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},         {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},     {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0}};

  Vector f = Vector::Zero(static_cast<Index>(cells) * cells);
  for (int iy = 0; iy < cells; ++iy) {
    const double y = 2.0 * (iy + 0.5) / cells - 1.0;
    for (int ix = 0; ix < cells; ++ix) {
      const double x = 2.0 * (ix + 0.5) / cells - 1.0;
      double v = 0.0;
      for (const auto& e : kEllipses) {
        const double phi = e.phi * std::numbers::pi / 180.0;
        const double u = (x - e.x0) * std::cos(phi) + (y - e.y0) * std::sin(phi);
        const double w = -(x - e.x0) * std::sin(phi) + (y - e.y0) * std::cos(phi);
        if (u * u / (e.a * e.a) + w * w / (e.b * e.b) <= 1.0) v += e.v;
      }
      // 1 - 0.8 - 0.2 leaves a rounding residue below zero.
      f[static_cast<Index>(iy) * cells + ix] = std::max(v, 0.0);
    }
  }
  return f;
}

ProblemInstance parallel_tomo(const TomoGeometry& geometry) {
  SparseMatrix s = parallel_tomo_matrix(geometry);
  Vector f = shepp_logan(geometry.cells);
  Vector g = s * f;
  return ProblemInstance{"parallel_tomo", 0, LinearOperator::sparse(std::move(s)), std::move(f),
                         std::move(g), geometry};
}

}  // namespace riskreg
