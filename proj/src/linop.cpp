#include "riskreg/linop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "riskreg/error.hpp"
#include "riskreg/rng.hpp"

namespace riskreg {

LinearOperator LinearOperator::dense(Matrix a) {
  LinearOperator op;
  op.rows_ = a.rows();
  op.cols_ = a.cols();
  op.representation_ = Representation::dense;
  auto m = std::make_shared<const Matrix>(std::move(a));
  op.dense_ = m;
  op.apply_ = [m](const Vector& x, Vector& y) { y.noalias() = (*m) * x; };
  op.apply_adjoint_ = [m](const Vector& y, Vector& x) { x.noalias() = m->transpose() * y; };
  return op;
}

LinearOperator LinearOperator::sparse(SparseMatrix a) {
  auto m = std::make_shared<const SparseMatrix>(std::move(a));
  return functional(
      m->rows(), m->cols(), [m](const Vector& x, Vector& y) { y = (*m) * x; },
      [m](const Vector& y, Vector& x) { x = m->transpose() * y; });
}

LinearOperator LinearOperator::functional(Index rows, Index cols, Map apply, Map apply_adjoint) {
  if (rows < 0 || cols < 0 || !apply || !apply_adjoint) {
    throw InputError("functional operator needs non-negative sizes and both maps");
  }
  LinearOperator op;
  op.rows_ = rows;
  op.cols_ = cols;
  op.representation_ = Representation::matrix_free;
  op.apply_ = std::move(apply);
  op.apply_adjoint_ = std::move(apply_adjoint);
  return op;
}

Vector LinearOperator::apply(const Vector& x) const {
  if (x.size() != cols_) {
    throw InputError("apply: expected vector of length " + std::to_string(cols_) + ", got " +
                     std::to_string(x.size()));
  }
  Vector y(rows_);
  apply_(x, y);
  return y;
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  if (y.size() != rows_) {
    throw InputError("apply_adjoint: expected vector of length " + std::to_string(rows_) +
                     ", got " + std::to_string(y.size()));
  }
  Vector x(cols_);
  apply_adjoint_(y, x);
  return x;
}

LinearOperator LinearOperator::as_matrix_free() const {
  LinearOperator op = *this;
  op.representation_ = Representation::matrix_free;
  op.dense_.reset();
  return op;
}

Matrix LinearOperator::to_dense() const {
  if (dense_) return *dense_;
  Matrix out(rows_, cols_);
  Vector e = Vector::Zero(cols_);
  for (Index j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    out.col(j) = apply(e);
    e[j] = 0.0;
  }
  return out;
}

namespace {

template <class Solver>
SpectralDecomposition truncate(const Solver& solver, Index rows, Index cols) {
  const Vector& s = solver.singularValues();
  Index r = 0;
  if (s.size() > 0 && s[0] > 0.0) {
    const double cutoff = s[0] * kRankCutoff;
    while (r < s.size() && s[r] > cutoff) ++r;
  }
  SpectralDecomposition dec;
  dec.rows = rows;
  dec.cols = cols;
  dec.singular_values = s.head(r);
  dec.left_vectors = solver.matrixU().leftCols(r);
  dec.right_vectors = solver.matrixV().leftCols(r);
  return dec;
}

}  // namespace

SpectralDecomposition svd(const LinearOperator& a) {
  const Matrix* m = a.dense_matrix();
  if (m == nullptr) throw InputError("svd requires a dense operator");
  if (!m->allFinite()) throw InputError("svd: matrix has non-finite entries");
  // One-sided Jacobi is accurate for the tiny singular values of the 1-D
  // benchmarks; divide and conquer keeps large operators tractable.
  if (std::min(m->rows(), m->cols()) <= 512) {
    Eigen::JacobiSVD<Matrix> solver(*m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return truncate(solver, m->rows(), m->cols());
  }
  Eigen::BDCSVD<Matrix> solver(*m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return truncate(solver, m->rows(), m->cols());
}

PowerResult power_iteration(const LinearOperator& a, const PowerOptions& options) {
  if (!(options.tol > 0.0)) throw InputError("power_iteration: tol must be positive");
  const CounterRng rng(options.seed, StreamTag::power_start, 0);
  Vector v = rng.normal_vector(a.cols());
  v.normalize();

  PowerResult result;
  double previous = 0.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    const Vector av = a.apply(v);
    const Vector w = a.apply_adjoint(av);
    const double quotient = av.squaredNorm();  // v^T A^T A v with ||v|| = 1
    result.rayleigh_quotients.push_back(quotient);
    result.iterations = it;
    result.eigenvalue = quotient;
    const double wn = w.norm();
    if (wn == 0.0) {
      throw InputError("power_iteration: operator annihilates the start vector");
    }
    if (it > 1 && std::abs(quotient - previous) <= options.tol * quotient) return result;
    previous = quotient;
    v = w / wn;
  }
  throw ConvergenceError("power_iteration: no convergence within " +
                             std::to_string(options.max_iter) + " iterations",
                         std::vector<double>(v.data(), v.data() + v.size()));
}

double largest_eigenvalue(const LinearOperator& a, double tol, int max_iter, std::uint64_t seed) {
  return power_iteration(a, PowerOptions{tol, max_iter, seed}).eigenvalue;
}

namespace {

int iteration_cap(const LinearOperator& a, const KrylovOptions& options) {
  if (options.max_iter > 0) return options.max_iter;
  return static_cast<int>(10 * std::max<Index>(1, std::min(a.rows(), a.cols())));
}

}  // namespace

KrylovResult damped_least_squares(const LinearOperator& a, const Vector& b, double alpha,
                                  const KrylovOptions& options) {
  if (b.size() != a.rows()) throw InputError("damped_least_squares: data length mismatch");
  if (alpha < 0.0) throw InputError("damped_least_squares: alpha must be non-negative");

  KrylovResult result;
  result.x = Vector::Zero(a.cols());
  Vector r = b;
  Vector s = a.apply_adjoint(r);
  const double rhs_norm = s.norm();
  if (rhs_norm == 0.0) return result;

  Vector p = s;
  double gamma = s.squaredNorm();
  const int cap = iteration_cap(a, options);
  for (int it = 1; it <= cap; ++it) {
    const Vector q = a.apply(p);
    const double delta = q.squaredNorm() + alpha * p.squaredNorm();
    if (!(delta > 0.0)) break;
    const double step = gamma / delta;
    result.x += step * p;
    r -= step * q;
    s = a.apply_adjoint(r) - alpha * result.x;
    const double gamma_next = s.squaredNorm();
    result.iterations = it;
    result.relative_residual = std::sqrt(gamma_next) / rhs_norm;
    if (result.relative_residual <= options.tol) return result;
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  throw ConvergenceError("damped_least_squares: relative residual " +
                             std::to_string(result.relative_residual) + " above tolerance " +
                             std::to_string(options.tol),
                         std::vector<double>(result.x.data(), result.x.data() + result.x.size()));
}

std::vector<Vector> shifted_damped_least_squares(const LinearOperator& a, const Vector& b,
                                                 std::span<const double> alphas,
                                                 const KrylovOptions& options) {
  if (b.size() != a.rows()) throw InputError("shifted solve: data length mismatch");
  const std::size_t k = alphas.size();
  std::vector<Vector> x(k, Vector::Zero(a.cols()));
  if (k == 0) return x;
  for (double alpha : alphas) {
    if (!(alpha >= 0.0)) throw InputError("shifted solve: alphas must be non-negative");
  }
  const double base = *std::min_element(alphas.begin(), alphas.end());

  Vector r = a.apply_adjoint(b);
  const double rhs_norm = r.norm();
  if (rhs_norm == 0.0) return x;

  // CG on (A^T A + base I) x = A^T b; shift j solves with extra sigma_j.
  std::vector<double> sigma(k), zeta(k, 1.0), zeta_prev(k, 1.0);
  std::vector<Vector> p(k, r);
  std::vector<bool> done(k, false);
  for (std::size_t j = 0; j < k; ++j) sigma[j] = alphas[j] - base;

  Vector pb = r;
  double rr = r.squaredNorm();
  double step_prev = 1.0;
  double beta_prev = 0.0;
  std::size_t remaining = k;
  const int cap = iteration_cap(a, options);
  double worst = 1.0;
  for (int it = 1; it <= cap; ++it) {
    const Vector q = a.apply_adjoint(a.apply(pb)) + base * pb;
    const double pq = pb.dot(q);
    if (!(pq > 0.0)) break;
    const double step = rr / pq;
    r -= step * q;
    const double rr_next = r.squaredNorm();
    const double beta = rr_next / rr;

    worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (done[j]) continue;
      const double denom = step * beta_prev * (zeta_prev[j] - zeta[j]) +
                           zeta_prev[j] * step_prev * (1.0 + sigma[j] * step);
      const double zeta_next = zeta[j] * zeta_prev[j] * step_prev / denom;
      const double ratio = zeta_next / zeta[j];
      x[j] += (step * ratio) * p[j];
      p[j] = zeta_next * r + (beta * ratio * ratio) * p[j];
      zeta_prev[j] = zeta[j];
      zeta[j] = zeta_next;
      const double rel = std::abs(zeta_next) * std::sqrt(rr_next) / rhs_norm;
      if (rel <= options.tol) {
        done[j] = true;
        --remaining;
      } else {
        worst = std::max(worst, rel);
      }
    }
    if (remaining == 0) return x;

    pb = r + beta * pb;
    rr = rr_next;
    step_prev = step;
    beta_prev = beta;
  }
  std::vector<double> unconverged;
  for (std::size_t j = 0; j < k; ++j) {
    if (!done[j]) unconverged.push_back(alphas[j]);
  }
  throw ConvergenceError("shifted solve: " + std::to_string(unconverged.size()) +
                             " shifts above tolerance (worst relative residual " +
                             std::to_string(worst) + ")",
                         std::move(unconverged));
}

Vector probe_vector(Index size, int index, std::uint64_t seed, ProbeKind kind) {
  const CounterRng rng(seed, StreamTag::probe, static_cast<std::uint64_t>(index));
  return kind == ProbeKind::gaussian ? rng.normal_vector(size) : rng.rademacher_vector(size);
}

std::vector<StochasticInfluence> stochastic_influence_curve(const LinearOperator& a,
                                                            std::span<const double> alphas,
                                                            const ProbeOptions& options) {
  if (options.probes < 1) throw InputError("stochastic influence: probes must be >= 1");
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) throw InputError("stochastic influence: alpha must be positive");
  }
  std::vector<StochasticInfluence> out(alphas.size());
  const KrylovOptions krylov{options.solve_tol, 0};
  for (int i = 0; i < options.probes; ++i) {
    const Vector z = probe_vector(a.rows(), i, options.seed, options.kind);
    const auto w = shifted_damped_least_squares(a, z, alphas, krylov);
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      const Vector xz = a.apply(w[j]);
      out[j].frob_sq += xz.squaredNorm();
      out[j].trace += z.dot(xz);
      out[j].propagation_sq += w[j].squaredNorm();
    }
  }
  const double inv = 1.0 / options.probes;
  for (auto& q : out) {
    q.frob_sq *= inv;
    q.trace *= inv;
    q.propagation_sq *= inv;
  }
  return out;
}

StochasticInfluence stochastic_influence(const LinearOperator& a, double alpha,
                                         const ProbeOptions& options) {
  if (options.probes < 1) throw InputError("stochastic influence: probes must be >= 1");
  if (!(alpha > 0.0)) throw InputError("stochastic influence: alpha must be positive");
  StochasticInfluence out;
  const KrylovOptions krylov{options.solve_tol, 0};
  for (int i = 0; i < options.probes; ++i) {
    const Vector z = probe_vector(a.rows(), i, options.seed, options.kind);
    const Vector w = damped_least_squares(a, z, alpha, krylov).x;
    const Vector xz = a.apply(w);
    out.frob_sq += xz.squaredNorm();
    out.trace += z.dot(xz);
    out.propagation_sq += w.squaredNorm();
  }
  const double inv = 1.0 / options.probes;
  out.frob_sq *= inv;
  out.trace *= inv;
  out.propagation_sq *= inv;
  return out;
}

double frobenius_sq_influence(const LinearOperator& a, double alpha, int probes,
                              std::uint64_t seed, double solve_tol) {
  return stochastic_influence(a, alpha, ProbeOptions{probes, seed, solve_tol}).frob_sq;
}

double trace_influence(const LinearOperator& a, double alpha, int probes, std::uint64_t seed,
                       double solve_tol) {
  return stochastic_influence(a, alpha, ProbeOptions{probes, seed, solve_tol}).trace;
}

}  // namespace riskreg
