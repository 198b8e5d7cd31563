#include "riskreg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "riskreg/error.hpp"
#include "riskreg/rng.hpp"

namespace riskreg {

namespace {

constexpr double kPi = std::numbers::pi;

void check_size(std::string_view name, Index n) {
  if (n < 16 || n > 2048) {
    throw InputError(std::string(name) + ": n must be in [16, 2048], got " + std::to_string(n));
  }
}

double sinc(double x) { return std::abs(x) < 1e-300 ? 1.0 : std::sin(x) / x; }

// Gauss-Laguerre nodes and log-weights for n points.
void gauss_laguerre(Index n, Vector& nodes, Vector& log_weights) {
  Vector diag(n), sub(n - 1);
  for (Index k = 0; k < n; ++k) diag[k] = 2.0 * static_cast<double>(k) + 1.0;
  for (Index k = 0; k + 1 < n; ++k) sub[k] = static_cast<double>(k) + 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  nodes = eig.eigenvalues();

  // L_n(t) and L_{n+1}(t) with a running log scale so large t cannot overflow.
  struct Eval {
    double ln, ln1, lnm1, log_scale;
  };
  auto laguerre = [n](double t) {
    double prev = 1.0;
    double cur = 1.0 - t;
    double log_scale = 0.0;
    double lnm1 = prev;
    for (Index k = 1; k <= n; ++k) {
      const double kd = static_cast<double>(k);
      const double next = ((2.0 * kd + 1.0 - t) * cur - kd * prev) / (kd + 1.0);
      prev = cur;
      cur = next;
      if (k == n - 1) lnm1 = prev;
      const double mag = std::abs(cur);
      if (mag > 1e100) {
        prev /= mag;
        cur /= mag;
        lnm1 /= mag;
        log_scale += std::log(mag);
      }
    }
    // After the loop prev = L_n, cur = L_{n+1}.
    return Eval{prev, cur, lnm1, log_scale};
  };

  log_weights.resize(n);
  for (Index j = 0; j < n; ++j) {
    double t = nodes[j];
    for (int it = 0; it < 3; ++it) {
      const Eval e = laguerre(t);
      // L_n'(t) = n (L_n - L_{n-1}) / t
      const double deriv = static_cast<double>(n) * (e.ln - e.lnm1) / t;
      if (deriv == 0.0) break;
      const double step = e.ln / deriv;
      if (!std::isfinite(step) || std::abs(step) > 1e-3 * t) break;
      t -= step;
    }
    nodes[j] = t;
    const Eval e = laguerre(t);
    const double np1 = static_cast<double>(n) + 1.0;
    log_weights[j] = std::log(t) - 2.0 * (std::log(np1 * std::abs(e.ln1)) + e.log_scale);
  }
}

}  // namespace

std::vector<double> TomoGeometry::angles() const {
  if (!angles_deg.empty()) return angles_deg;
  std::vector<double> out;
  for (int a = 0; a < 180; a += 3) out.push_back(a);
  return out;
}

double TomoGeometry::ray_span() const { return span > 0.0 ? span : std::sqrt(2.0) * cells; }

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"baart",    "deriv2",   "foxgood", "gravity",
                                              "heat",     "i_laplace", "phillips", "shaw",
                                              "parallel_tomo"};
  return names;
}

std::vector<int> problem_variants(std::string_view name) {
  if (name == "heat") return {1, 5};
  if (name == "i_laplace") return {1, 2, 3};
  return {0};
}

int default_variant(std::string_view name) { return problem_variants(name).front(); }

Matrix baart(Index n, Vector* f_true) {
  check_size("baart", n);
  const double nd = static_cast<double>(n);
  const double hs = kPi / (2.0 * nd);
  const double ht = kPi / nd;
  const double c = 1.0 / (3.0 * std::sqrt(2.0));
  // Exact integral of exp(s co) over [s_{i-1}, s_i], divided by co.
  auto cell = [hs](Index i, double co) {
    const double s0 = static_cast<double>(i) * hs;
    const double s1 = s0 + hs;
    if (std::abs(co) < 1e-14) return hs;
    return (std::exp(s1 * co) - std::exp(s0 * co)) / co;
  };
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    const double jd = static_cast<double>(j);
    const double co1 = std::cos(jd * ht);
    const double co2 = std::cos((jd + 0.5) * ht);
    const double co3 = std::cos((jd + 1.0) * ht);
    for (Index i = 0; i < n; ++i) a(i, j) = c * (cell(i, co1) + 4.0 * cell(i, co2) + cell(i, co3));
  }
  if (f_true) {
    f_true->resize(n);
    for (Index j = 0; j < n; ++j) {
      const double jd = static_cast<double>(j);
      (*f_true)[j] = (std::cos(jd * ht) - std::cos((jd + 1.0) * ht)) / std::sqrt(ht);
    }
  }
  return a;
}

Matrix deriv2(Index n, Vector* f_true) {
  check_size("deriv2", n);
  const double h = 1.0 / static_cast<double>(n);
  const double h2 = h * h;
  Matrix a(n, n);
  for (Index i = 1; i <= n; ++i) {
    const double id = static_cast<double>(i);
    a(i - 1, i - 1) = h2 * ((id * id - id + 0.25) * h - (id - 2.0 / 3.0));
    for (Index j = 1; j < i; ++j) {
      const double v = h2 * (static_cast<double>(j) - 0.5) * ((id - 0.5) * h - 1.0);
      a(i - 1, j - 1) = v;
      a(j - 1, i - 1) = v;
    }
  }
  if (f_true) {
    f_true->resize(n);
    const double h32 = h * std::sqrt(h);
    for (Index i = 0; i < n; ++i) (*f_true)[i] = h32 * (static_cast<double>(i) + 0.5);
  }
  return a;
}

Matrix foxgood(Index n, Vector* f_true) {
  check_size("foxgood", n);
  const double h = 1.0 / static_cast<double>(n);
  Vector t(n);
  for (Index i = 0; i < n; ++i) t[i] = h * (static_cast<double>(i) + 0.5);
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = h * std::sqrt(t[i] * t[i] + t[j] * t[j]);
  }
  if (f_true) *f_true = t;
  return a;
}

Matrix gravity(Index n, Vector* f_true) {
  check_size("gravity", n);
  constexpr double d = 0.25;
  const double h = 1.0 / static_cast<double>(n);
  Vector t(n);
  for (Index i = 0; i < n; ++i) t[i] = h * (static_cast<double>(i) + 0.5);
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double diff = t[i] - t[j];
      a(i, j) = h * d / std::pow(d * d + diff * diff, 1.5);
    }
  }
  if (f_true) {
    f_true->resize(n);
    for (Index i = 0; i < n; ++i) (*f_true)[i] = std::sin(kPi * t[i]) + 0.5 * std::sin(2.0 * kPi * t[i]);
  }
  return a;
}

Matrix heat(Index n, double kappa, Vector* f_true) {
  check_size("heat", n);
  if (!(kappa > 0.0)) throw InputError("heat: kappa must be positive");
  const double h = 1.0 / static_cast<double>(n);
  const double c = h / (2.0 * kappa * std::sqrt(kPi));
  const double d = 1.0 / (4.0 * kappa * kappa);
  Vector k(n);
  for (Index i = 0; i < n; ++i) {
    const double t = h * (static_cast<double>(i) + 0.5);
    k[i] = c * std::pow(t, -1.5) * std::exp(-d / t);
  }
  Matrix a = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) a(i, j) = k[i - j];
  }
  if (f_true) {
    *f_true = Vector::Zero(n);
    for (Index i = 1; i <= n / 2; ++i) {
      const double ti = static_cast<double>(i) * 20.0 / static_cast<double>(n);
      double v;
      if (ti < 2.0) {
        v = 0.75 * ti * ti / 4.0;
      } else if (ti < 3.0) {
        v = 0.75 + (ti - 2.0) * (3.0 - ti);
      } else {
        v = 0.75 * std::exp(-(ti - 3.0) * 2.0);
      }
      (*f_true)[i - 1] = v;
    }
  }
  return a;
}

Matrix i_laplace(Index n, int example, Vector* f_true) {
  check_size("i_laplace", n);
  if (example < 1 || example > 3) throw InputError("i_laplace: case must be 1, 2 or 3");
  Vector t, log_w;
  gauss_laguerre(n, t, log_w);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    const double s = 10.0 * static_cast<double>(i + 1) / static_cast<double>(n);
    for (Index j = 0; j < n; ++j) a(i, j) = std::exp(log_w[j] + (1.0 - s) * t[j]);
  }
  if (f_true) {
    f_true->resize(n);
    for (Index j = 0; j < n; ++j) {
      const double e = std::exp(-t[j] / 2.0);
      switch (example) {
        case 1: (*f_true)[j] = e; break;
        case 2: (*f_true)[j] = 1.0 - e; break;
        default: (*f_true)[j] = t[j] * t[j] * e; break;
      }
    }
  }
  return a;
}

Matrix phillips(Index n, Vector* f_true) {
  check_size("phillips", n);
  if (n % 4 != 0) throw InputError("phillips: n must be a multiple of 4");
  const double nd = static_cast<double>(n);
  const double h = 12.0 / nd;
  const Index n4 = n / 4;
  const double theta = 4.0 * kPi / nd;
  const double scale = 9.0 / (h * kPi * kPi);
  Vector r1 = Vector::Zero(n);
  for (Index k = 0; k < n4; ++k) {
    const double kd = static_cast<double>(k);
    r1[k] = h + scale * (2.0 * std::cos(kd * theta) - std::cos((kd - 1.0) * theta) -
                         std::cos((kd + 1.0) * theta));
  }
  r1[n4] = h / 2.0 + scale * (std::cos(theta) - 1.0);
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = r1[std::abs(i - j)];
  }
  if (f_true) {
    // Cell averages of 1 + cos(pi t / 3) on |t| < 3, zero elsewhere.
    f_true->resize(n);
    auto antideriv = [](double t) { return t + 3.0 / kPi * std::sin(kPi * t / 3.0); };
    for (Index i = 0; i < n; ++i) {
      const double t0 = std::max(-6.0 + h * static_cast<double>(i), -3.0);
      const double t1 = std::min(-6.0 + h * static_cast<double>(i + 1), 3.0);
      (*f_true)[i] = t1 > t0 ? (antideriv(t1) - antideriv(t0)) / h : 0.0;
    }
  }
  return a;
}

Matrix shaw(Index n, Vector* f_true) {
  check_size("shaw", n);
  const double h = kPi / static_cast<double>(n);
  Vector co(n), psi(n), t(n);
  for (Index i = 0; i < n; ++i) {
    t[i] = -kPi / 2.0 + (static_cast<double>(i) + 0.5) * h;
    co[i] = std::cos(t[i]);
    psi[i] = kPi * std::sin(t[i]);
  }
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = (co[i] + co[j]) * sinc(psi[i] + psi[j]);
      a(i, j) = h * v * v;
      a(j, i) = a(i, j);
    }
  }
  if (f_true) {
    f_true->resize(n);
    for (Index i = 0; i < n; ++i) {
      (*f_true)[i] = 2.0 * std::exp(-6.0 * (t[i] - 0.8) * (t[i] - 0.8)) +
                     std::exp(-2.0 * (t[i] + 0.5) * (t[i] + 0.5));
    }
  }
  return a;
}

void check_problem_size(std::string_view name, Index n) {
  if (name == "parallel_tomo") {
    if (n < 1 || n > 1024) throw InputError("parallel_tomo: cells per side must be in [1, 1024]");
    return;
  }
  check_size(name, n);
  if (name == "phillips" && n % 4 != 0) throw InputError("phillips: n must be a multiple of 4");
}

ProblemInstance make_problem(std::string_view name, int variant, Index n) {
  const auto& names = problem_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InputError("unknown problem '" + std::string(name) + "'");
  }
  const auto variants = problem_variants(name);
  if (std::find(variants.begin(), variants.end(), variant) == variants.end()) {
    throw InputError("problem '" + std::string(name) + "' has no variant " + std::to_string(variant));
  }
  if (name == "parallel_tomo") {
    TomoGeometry geo;
    check_problem_size(name, n);
    geo.cells = static_cast<int>(n);
    return parallel_tomo(geo);
  }

  Vector f;
  Matrix a;
  if (name == "baart") a = baart(n, &f);
  else if (name == "deriv2") a = deriv2(n, &f);
  else if (name == "foxgood") a = foxgood(n, &f);
  else if (name == "gravity") a = gravity(n, &f);
  else if (name == "heat") a = heat(n, variant, &f);
  else if (name == "i_laplace") a = i_laplace(n, variant, &f);
  else if (name == "phillips") a = phillips(n, &f);
  else a = shaw(n, &f);

  Vector g = a * f;
  return ProblemInstance{std::string(name), variant, LinearOperator::dense(std::move(a)),
                         std::move(f), std::move(g), std::nullopt};
}

double sigma_for_snr(const Vector& g_true, double xi) {
  if (!std::isfinite(xi)) throw InputError("snr must be finite");
  const double n = static_cast<double>(g_true.size());
  return g_true.norm() / (std::sqrt(n) * std::pow(10.0, xi / 20.0));
}

NoisyData add_noise_sigma(const ProblemInstance& p, double sigma, std::uint64_t seed,
                          std::uint64_t replicate) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be non-negative");
  const CounterRng rng(seed, StreamTag::noise, replicate);
  NoisyData d;
  d.g = p.g_true + sigma * rng.normal_vector(p.g_true.size());
  d.sigma = sigma;
  const double n = static_cast<double>(p.g_true.size());
  d.xi = 10.0 * std::log10(p.g_true.squaredNorm() / (n * sigma * sigma));
  d.seed = seed;
  d.replicate = replicate;
  return d;
}

NoisyData add_noise(const ProblemInstance& p, double xi, std::uint64_t seed,
                    std::uint64_t replicate) {
  NoisyData d = add_noise_sigma(p, sigma_for_snr(p.g_true, xi), seed, replicate);
  d.xi = xi;
  return d;
}

}  // namespace riskreg
