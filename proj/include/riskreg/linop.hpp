#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace riskreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Representation { dense, matrix_free };

/// A forward map A: R^cols -> R^rows together with its adjoint.
///
/// Dense operators keep their matrix so spectral routines can use it; every
/// other backend is a pair of closures and is treated as matrix-free. Copies
/// share the underlying storage, which is immutable after construction.
class LinearOperator {
 public:
  using Map = std::function<void(const Vector& in, Vector& out)>;

  static LinearOperator dense(Matrix a);
  static LinearOperator sparse(SparseMatrix a);
  static LinearOperator functional(Index rows, Index cols, Map apply, Map apply_adjoint);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Representation representation() const noexcept { return representation_; }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;

  /// Null unless the representation is dense.
  const Matrix* dense_matrix() const noexcept { return dense_.get(); }

  /// Same map, with the dense matrix hidden behind closures.
  LinearOperator as_matrix_free() const;

  /// Materializes the operator column by column (cols applications).
  Matrix to_dense() const;

 private:
  LinearOperator() = default;

  Index rows_ = 0;
  Index cols_ = 0;
  Representation representation_ = Representation::matrix_free;
  std::shared_ptr<const Matrix> dense_;
  Map apply_;
  Map apply_adjoint_;
};

/// Rank-revealing thin SVD: only singular values above the relative cutoff
/// s_1 * 1e-12 are kept.
struct SpectralDecomposition {
  Vector singular_values;  // s_1 >= ... >= s_r > 0
  Matrix left_vectors;     // n x r, orthonormal columns u_i
  Matrix right_vectors;    // m x r, orthonormal columns v_i
  Index rows = 0;          // n
  Index cols = 0;          // m

  Index rank() const noexcept { return singular_values.size(); }
  double largest() const { return rank() > 0 ? singular_values[0] : 0.0; }
  double smallest() const { return rank() > 0 ? singular_values[rank() - 1] : 0.0; }
  /// tr(A^T A) = sum of s_i^2.
  double trace_gram() const { return singular_values.squaredNorm(); }
};

inline constexpr double kRankCutoff = 1e-12;

SpectralDecomposition svd(const LinearOperator& a);

struct PowerOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  std::uint64_t seed = 0;
};

struct PowerResult {
  double eigenvalue = 0.0;
  int iterations = 0;
  std::vector<double> rayleigh_quotients;  // one per iteration
};

/// Power iteration on A^T A from a seeded Gaussian start vector. Stops when
/// successive Rayleigh quotients agree to `tol` relative.
PowerResult power_iteration(const LinearOperator& a, const PowerOptions& options);

/// lambda_1(A^T A).
double largest_eigenvalue(const LinearOperator& a, double tol = 1e-8, int max_iter = 10000,
                          std::uint64_t seed = 0);

struct KrylovOptions {
  double tol = 1e-8;  // relative residual of the normal equations
  int max_iter = 0;   // 0 means 10 * min(rows, cols)
};

struct KrylovResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (A^T A + alpha I) x = A^T b with CGLS. Throws ConvergenceError
/// carrying the last iterate when the tolerance is not met.
KrylovResult damped_least_squares(const LinearOperator& a, const Vector& b, double alpha,
                                  const KrylovOptions& options = {});

/// Solves (A^T A + alpha_j I) x_j = A^T b for every alpha_j at once with
/// multi-shift CG on the normal equations. All shifts share one Krylov space
/// built for the smallest alpha; each shift stops updating once its own
/// (collinear) residual meets the tolerance.
std::vector<Vector> shifted_damped_least_squares(const LinearOperator& a, const Vector& b,
                                                 std::span<const double> alphas,
                                                 const KrylovOptions& options = {});

enum class ProbeKind { gaussian, rademacher };

struct ProbeOptions {
  int probes = 20;
  std::uint64_t seed = 0;
  double solve_tol = 1e-8;
  ProbeKind kind = ProbeKind::gaussian;
};

/// Probe vector `index` of a frozen probe set.
Vector probe_vector(Index size, int index, std::uint64_t seed, ProbeKind kind);

/// Hutchinson estimates of the influence-matrix scalars at one alpha, all
/// from the same probes: frob_sq ~ ||X||_F^2, trace ~ tr X and
/// propagation_sq ~ tr((A^T A + alpha I)^-2 A^T A).
struct StochasticInfluence {
  double frob_sq = 0.0;
  double trace = 0.0;
  double propagation_sq = 0.0;
};

/// Estimates at every alpha of a grid with one probe set shared by all
/// alphas, so the sampled curves are coherent in alpha.
std::vector<StochasticInfluence> stochastic_influence_curve(const LinearOperator& a,
                                                            std::span<const double> alphas,
                                                            const ProbeOptions& options);

StochasticInfluence stochastic_influence(const LinearOperator& a, double alpha,
                                         const ProbeOptions& options);

/// (1/p) sum ||A w_i||^2 with (A^T A + alpha I) w_i = A^T z_i.
double frobenius_sq_influence(const LinearOperator& a, double alpha, int probes,
                              std::uint64_t seed, double solve_tol = 1e-8);

/// (1/p) sum z_i^T A w_i, an unbiased estimate of tr X_alpha.
double trace_influence(const LinearOperator& a, double alpha, int probes, std::uint64_t seed,
                       double solve_tol = 1e-8);

}  // namespace riskreg
