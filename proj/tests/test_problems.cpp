#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "riskreg/container.hpp"
#include "riskreg/error.hpp"
#include "riskreg/problems.hpp"

using namespace riskreg;

namespace {

struct Variant {
  std::string name;
  int variant;
};

std::vector<Variant> all_1d_variants() {
  std::vector<Variant> out;
  for (const auto& name : problem_names()) {
    if (name == "parallel_tomo") continue;
    for (int v : problem_variants(name)) out.push_back({name, v});
  }
  return out;
}

// Chord length of the line {x : c x + s y = d} through [-h, h]^2.
double square_chord(double c, double s, double d, double h) {
  const double ac = std::abs(c);
  const double as = std::abs(s);
  const double outer = h * (ac + as);
  const double inner = h * std::abs(ac - as);
  const double ad = std::abs(d);
  if (ad >= outer) return 0.0;
  if (ad <= inner) return 2.0 * h / std::max(ac, as);
  return (outer - ad) / (ac * as);
}

std::string temp_path(const std::string& leaf) {
  return (std::filesystem::temp_directory_path() / ("riskreg_test_" + leaf)).string();
}

}  // namespace

TEST(Problems, ElevenVariants) {
  EXPECT_EQ(all_1d_variants().size(), 11u);
  EXPECT_EQ(default_variant("heat"), 1);
  EXPECT_EQ(default_variant("i_laplace"), 1);
  EXPECT_EQ(default_variant("shaw"), 0);
}

TEST(Problems, UnknownNameOrVariant) {
  EXPECT_THROW(make_problem("fanbeamtomo", 0, 64), InputError);
  EXPECT_THROW(make_problem("heat", 3, 64), InputError);
  EXPECT_THROW(make_problem("i_laplace", 4, 64), InputError);
  EXPECT_THROW(make_problem("shaw", 0, 8), InputError);
  EXPECT_THROW(make_problem("shaw", 0, 4096), InputError);
}

TEST(Problems, DataConsistencyAndDimensions) {
  for (const auto& [name, v] : all_1d_variants()) {
    const auto p = make_problem(name, v, 64);
    ASSERT_EQ(p.rows(), 64) << name;
    ASSERT_EQ(p.cols(), 64) << name;
    EXPECT_GT(p.f_true.norm(), 0.0) << name;
    EXPECT_GT(p.g_true.norm(), 0.0) << name;
    EXPECT_LE((p.g_true - p.a.apply(p.f_true)).norm(), 1e-10 * p.g_true.norm()) << name;
    EXPECT_TRUE(p.a.dense_matrix()->allFinite()) << name;
  }
}

TEST(Problems, PureFunctionOfArguments) {
  for (const auto& [name, v] : all_1d_variants()) {
    const auto a = make_problem(name, v, 32);
    const auto b = make_problem(name, v, 32);
    EXPECT_EQ(*a.a.dense_matrix(), *b.a.dense_matrix()) << name;
    EXPECT_EQ(a.f_true, b.f_true) << name;
  }
}

TEST(Problems, ShawSymmetric) {
  const Matrix a = shaw(64);
  EXPECT_LE((a - a.transpose()).norm(), 1e-12 * a.norm());
}

TEST(Problems, Deriv2SpectralDecay) {
  const auto dec = svd(LinearOperator::dense(deriv2(64)));
  for (Index i : {8, 10, 12, 16}) {
    const double ratio = dec.singular_values[2 * i - 1] / dec.singular_values[i - 1];
    EXPECT_GE(ratio, 0.15) << i;
    EXPECT_LE(ratio, 0.35) << i;
  }
}

TEST(Problems, ConditionNumbers) {
  for (const auto& [name, v] : all_1d_variants()) {
    const auto p = make_problem(name, v, 64);
    const Eigen::JacobiSVD<Matrix> full(*p.a.dense_matrix());
    const auto& s = full.singularValues();
    const double cond = s[0] / s[s.size() - 1];
    if (name == "heat" && v == 5) {
      EXPECT_LT(cond, 10.0);
    } else {
      EXPECT_GT(cond, 1e3) << name << v;
    }
  }
}

TEST(Problems, GeneratorsAgainstToolkitValues) {
  // Entries checked by hand against the published kernel definitions.
  const Matrix s = shaw(16);
  // shaw: a_ij = h (cos s + cos t)^2 (sin u / u)^2, u = pi (sin s + sin t),
  // midpoints s_1 = -15pi/32 with h = pi/16.
  const double th = -15.0 * M_PI / 32.0;
  const double u = 2.0 * M_PI * std::sin(th);
  EXPECT_NEAR(s(0, 0), M_PI / 16 * std::pow(2.0 * std::cos(th), 2) * std::pow(std::sin(u) / u, 2), 1e-14);
  const Matrix d = deriv2(16);
  // deriv2 (example 1): a_ii = h^2 ((i^2 - i + 0.25) h - (i - 2/3)) with h = 1/n.
  const double h = 1.0 / 16;
  EXPECT_NEAR(d(0, 0), h * h * ((1 - 1 + 0.25) * h - (1 - 2.0 / 3.0)), 1e-15);
  const Matrix g = gravity(16);
  // gravity: d = 0.25, a_ij = h d (d^2 + (s_i - t_j)^2)^(-3/2), diagonal h / d^2.
  EXPECT_NEAR(g(3, 3), h / (0.25 * 0.25), 1e-13);
  const Matrix f = foxgood(16);
  EXPECT_NEAR(f(0, 0), h * std::sqrt(2.0) * (h / 2), 1e-15);
}

TEST(Problems, PhillipsNeedsMultipleOfFour) {
  EXPECT_THROW(phillips(18), InputError);
  EXPECT_NO_THROW(phillips(20));
}

TEST(Noise, SigmaFromSnr) {
  const auto p = make_problem("shaw", 0, 64);
  const double rho = p.g_true.norm();
  EXPECT_NEAR(sigma_for_snr(p.g_true, 0.0), rho / 8.0, 1e-14);
  EXPECT_NEAR(sigma_for_snr(p.g_true, 20.0), rho / 80.0, 1e-14);
  const auto d = add_noise(p, 20.0, 1, 0);
  EXPECT_DOUBLE_EQ(d.sigma, sigma_for_snr(p.g_true, 20.0));
  EXPECT_DOUBLE_EQ(d.xi, 20.0);
}

TEST(Noise, DeterministicPerReplicate) {
  const auto p = make_problem("baart", 0, 64);
  const auto a = add_noise(p, 10.0, 42, 3);
  const auto b = add_noise(p, 10.0, 42, 3);
  const auto c = add_noise(p, 10.0, 42, 4);
  const auto d = add_noise(p, 10.0, 43, 3);
  EXPECT_EQ(a.g, b.g);
  EXPECT_NE(a.g, c.g);
  EXPECT_NE(a.g, d.g);
}

TEST(Noise, EmpiricalVariance) {
  const auto p = make_problem("shaw", 0, 2048);
  // Two replicates give 4096 samples of eta.
  const auto a = add_noise(p, 10.0, 5, 0);
  const auto b = add_noise(p, 10.0, 5, 1);
  const double s2 = a.sigma * a.sigma;
  const double v = ((a.g - p.g_true).squaredNorm() + (b.g - p.g_true).squaredNorm()) / 4096.0;
  EXPECT_NEAR(v / s2, 1.0, 0.05);
}

TEST(Noise, Isotropic) {
  // Lagged sample correlations within each of 50 draws of length 1024.
  const auto p = make_problem("shaw", 0, 1024);
  for (std::uint64_t r = 0; r < 50; ++r) {
    const Vector eta = add_noise(p, 10.0, 6, r).g - p.g_true;
    for (Index lag : {1, 2, 7, 100}) {
      const auto x = eta.head(1024 - lag);
      const auto y = eta.tail(1024 - lag);
      const double corr = x.dot(y) / (x.norm() * y.norm());
      EXPECT_LE(std::abs(corr), 0.1) << r << " " << lag;
    }
  }
}

TEST(Tomo, DefaultGeometry) {
  const TomoGeometry g;
  EXPECT_EQ(g.angles().size(), 60u);
  EXPECT_DOUBLE_EQ(g.angles().front(), 0.0);
  EXPECT_DOUBLE_EQ(g.angles().back(), 177.0);
  EXPECT_DOUBLE_EQ(g.ray_span(), std::sqrt(2.0) * 32);
  const auto p = parallel_tomo(g);
  EXPECT_EQ(p.rows(), 60 * 45);
  EXPECT_EQ(p.cols(), 32 * 32);
  EXPECT_EQ(p.a.dense_matrix(), nullptr);
  EXPECT_LE((p.g_true - p.a.apply(p.f_true)).norm(), 1e-10 * p.g_true.norm());
}

TEST(Tomo, DegenerateGeometry) {
  EXPECT_THROW(parallel_tomo_matrix(TomoGeometry{8, {}, 0, 0.0}), InputError);
  EXPECT_THROW(parallel_tomo_matrix(TomoGeometry{0, {}, 5, 0.0}), InputError);
}

TEST(Tomo, SingleRayThroughUniformImage) {
  for (double angle : {0.0, 90.0}) {
    const SparseMatrix a = parallel_tomo_matrix(TomoGeometry{8, {angle}, 1, 0.0});
    const Vector proj = a * Vector::Ones(64);
    EXPECT_NEAR(proj[0], 8.0, 1e-12) << angle;
  }
}

TEST(Tomo, CellOrdering) {
  // Horizontal rays at y = -0.5 and y = 0.5 cross rows iy = 3 and iy = 4.
  const SparseMatrix a = parallel_tomo_matrix(TomoGeometry{8, {90.0}, 2, 1.0});
  Vector f = Vector::Zero(64);
  for (int ix = 0; ix < 8; ++ix) f[3 * 8 + ix] = 1.0;
  const Vector proj = a * f;
  EXPECT_NEAR(proj[0], 8.0, 1e-12);
  EXPECT_NEAR(proj[1], 0.0, 1e-12);
  // A vertical ray at x = 2.5 sees column ix = 6 only.
  const SparseMatrix v = parallel_tomo_matrix(TomoGeometry{8, {0.0}, 2, 5.0});
  Vector col = Vector::Zero(64);
  for (int iy = 0; iy < 8; ++iy) col[iy * 8 + 6] = 1.0;
  const Vector pv = v * col;
  EXPECT_NEAR(pv[0], 0.0, 1e-12);
  EXPECT_NEAR(pv[1], 8.0, 1e-12);
}

TEST(Tomo, RowSumsEqualChordLengths) {
  const TomoGeometry g{16, {}, 31, 0.0};
  const SparseMatrix a = parallel_tomo_matrix(g);
  const Vector sums = a * Vector::Ones(256);
  const auto angles = g.angles();
  Index row = 0;
  for (double deg : angles) {
    const double th = deg * M_PI / 180.0;
    for (int k = 0; k < g.rays; ++k, ++row) {
      const double off = -0.5 * g.ray_span() + g.ray_span() * k / (g.rays - 1);
      EXPECT_NEAR(sums[row], square_chord(std::cos(th), std::sin(th), off, 8.0), 1e-10)
          << deg << " " << k;
    }
  }
}

TEST(Tomo, PhantomRange) {
  const Vector f = shepp_logan(64);
  EXPECT_EQ(f.size(), 64 * 64);
  EXPECT_GE(f.minCoeff(), 0.0);
  EXPECT_LE(f.maxCoeff(), 1.0 + 1e-12);
  EXPECT_NEAR(f.maxCoeff(), 1.0, 1e-12);
  // The outer ellipse does not reach the corners.
  EXPECT_EQ(f[0], 0.0);
}

TEST(Container, DenseRoundTrip) {
  const auto p = make_problem("heat", 5, 32);
  const auto d = add_noise(p, 20.0, 9, 2);
  const std::string path = temp_path("dense.rrc");
  write_container(path, p, &d);
  const auto c = read_container(path);
  EXPECT_EQ(c.problem.name, "heat");
  EXPECT_EQ(c.problem.variant, 5);
  EXPECT_EQ(*c.problem.a.dense_matrix(), *p.a.dense_matrix());
  EXPECT_EQ(c.problem.f_true, p.f_true);
  EXPECT_EQ(c.problem.g_true, p.g_true);
  ASSERT_TRUE(c.has_f_true);
  ASSERT_TRUE(c.data.has_value());
  EXPECT_EQ(c.data->g, d.g);
  EXPECT_EQ(c.data->sigma, d.sigma);
  EXPECT_EQ(c.data->xi, d.xi);
  EXPECT_EQ(c.data->seed, 9u);
  EXPECT_EQ(c.data->replicate, 2u);
  std::remove(path.c_str());
}

TEST(Container, WithoutTruthOrData) {
  const auto p = make_problem("shaw", 0, 16);
  const std::string path = temp_path("bare.rrc");
  write_container(path, p, nullptr, false);
  const auto c = read_container(path);
  EXPECT_FALSE(c.has_f_true);
  EXPECT_EQ(c.problem.f_true.size(), 0);
  EXPECT_FALSE(c.data.has_value());
  std::remove(path.c_str());
}

TEST(Container, TomographyRegenerates) {
  const auto p = parallel_tomo(TomoGeometry{12, {0.0, 45.0, 90.0}, 17, 0.0});
  const auto d = add_noise(p, 20.0, 1, 0);
  const std::string path = temp_path("tomo.rrc");
  write_container(path, p, &d);
  const auto c = read_container(path);
  ASSERT_TRUE(c.problem.tomo.has_value());
  EXPECT_EQ(c.problem.rows(), p.rows());
  const Vector x = Vector::LinSpaced(p.cols(), 0.0, 1.0);
  EXPECT_EQ(c.problem.a.apply(x), p.a.apply(x));
  EXPECT_EQ(c.data->g, d.g);
  // Only the header and vectors are stored, not the operator.
  EXPECT_LT(std::filesystem::file_size(path), static_cast<std::uintmax_t>(p.rows() * p.cols()));
  std::remove(path.c_str());
}

TEST(Container, MalformedInput) {
  const std::string path = temp_path("bad.rrc");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a container";
  }
  EXPECT_THROW(read_container(path), InputError);
  EXPECT_THROW(read_container(temp_path("missing.rrc")), InputError);
  // Truncated data block.
  const auto p = make_problem("shaw", 0, 16);
  write_container(path, p);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(read_container(path), InputError);
  std::remove(path.c_str());
}
