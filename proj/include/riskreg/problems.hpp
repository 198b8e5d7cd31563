#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riskreg/linop.hpp"

namespace riskreg {

/// Parallel-beam geometry on an l x l grid of unit cells centred at the origin.
struct TomoGeometry {
  int cells = 32;
  std::vector<double> angles_deg;  // empty means 0, 3, ..., 177
  int rays = 45;
  double span = 0.0;  // distance between outermost rays; 0 means sqrt(2) * cells

  std::vector<double> angles() const;
  double ray_span() const;
};

struct ProblemInstance {
  std::string name;
  int variant = 0;  // heat: kappa, i_laplace: case, otherwise 0
  LinearOperator a;
  Vector f_true;
  Vector g_true;
  std::optional<TomoGeometry> tomo;  // set for parallel_tomo

  Index rows() const noexcept { return a.rows(); }
  Index cols() const noexcept { return a.cols(); }
};

struct NoisyData {
  Vector g;
  double sigma = 0.0;
  double xi = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

/// baart, deriv2, foxgood, gravity, heat, i_laplace, phillips, shaw, parallel_tomo.
const std::vector<std::string>& problem_names();
/// Variants a name accepts; {0} for problems without one.
std::vector<int> problem_variants(std::string_view name);
/// Default variant: heat 1, i_laplace 1, otherwise 0.
int default_variant(std::string_view name);

/// Throws InputError when make_problem would reject n for this problem.
void check_problem_size(std::string_view name, Index n);

/// For parallel_tomo, n is the number of cells per side and the default
/// geometry is used.
ProblemInstance make_problem(std::string_view name, int variant, Index n);

Matrix baart(Index n, Vector* f_true = nullptr);
Matrix deriv2(Index n, Vector* f_true = nullptr);
Matrix foxgood(Index n, Vector* f_true = nullptr);
Matrix gravity(Index n, Vector* f_true = nullptr);
Matrix heat(Index n, double kappa, Vector* f_true = nullptr);
Matrix i_laplace(Index n, int example, Vector* f_true = nullptr);
Matrix phillips(Index n, Vector* f_true = nullptr);
Matrix shaw(Index n, Vector* f_true = nullptr);

/// Ray-cell intersection lengths, one row per (angle, ray) in angle-major
/// order. Cell (ix, iy) is column iy * cells + ix, iy counted from the bottom.
SparseMatrix parallel_tomo_matrix(const TomoGeometry& geometry);
/// Modified Shepp-Logan phantom sampled at cell centres, same cell ordering.
Vector shepp_logan(int cells);
ProblemInstance parallel_tomo(const TomoGeometry& geometry);

/// sigma = ||g_true|| / (sqrt(n) 10^(xi/20)).
double sigma_for_snr(const Vector& g_true, double xi);

/// g = g_true + sigma * eta with eta drawn from the (seed, replicate) noise stream.
NoisyData add_noise(const ProblemInstance& p, double xi, std::uint64_t seed,
                    std::uint64_t replicate);
NoisyData add_noise_sigma(const ProblemInstance& p, double sigma, std::uint64_t seed,
                          std::uint64_t replicate);

}  // namespace riskreg
