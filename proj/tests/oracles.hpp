#pragma once

// Reference computations built from dense linear algebra on the explicit
// influence matrix. They share no code with the library's spectral formulas.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// X = A (A^T A + alpha I)^-1 A^T
inline Mat influence(const Mat& a, double alpha) {
  const Mat gram = a.transpose() * a + alpha * Mat::Identity(a.cols(), a.cols());
  return a * gram.ldlt().solve(a.transpose());
}

inline Vec tikhonov(const Mat& a, const Vec& g, double alpha) {
  const Mat gram = a.transpose() * a + alpha * Mat::Identity(a.cols(), a.cols());
  return gram.ldlt().solve(a.transpose() * g);
}

// Smallest singular value of X - I (symmetric, so smallest |eigenvalue|).
inline double smallest_sv_of_residual_map(const Mat& x) {
  const Mat m = x - Mat::Identity(x.rows(), x.cols());
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().minCoeff();
}

// rho^2 s_n(X - I)^2 + sigma^2 ||X||_F^2
inline double lower_bound(const Mat& a, double rho2, double sigma2, double alpha) {
  const Mat x = influence(a, alpha);
  const double sn = smallest_sv_of_residual_map(x);
  return rho2 * sn * sn + sigma2 * x.squaredNorm();
}

// ||(X - I) g_true||^2 + sigma^2 ||X||_F^2
inline double predictive_risk(const Mat& a, const Vec& g_true, double sigma2, double alpha) {
  const Mat x = influence(a, alpha);
  return (x * g_true - g_true).squaredNorm() + sigma2 * x.squaredNorm();
}

inline double central_difference(const std::function<double(double)>& f, double x, double rel = 1e-5) {
  const double h = rel * x;
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Local minimizer of f on [lo, hi] in log scale: dense scan, then golden section.
inline double argmin_log(const std::function<double(double)>& f, double lo, double hi, int scan = 400) {
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  int best = 0;
  double best_v = INFINITY;
  for (int i = 0; i <= scan; ++i) {
    const double v = f(std::exp(llo + (lhi - llo) * i / scan));
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double a = llo + (lhi - llo) * std::max(0, best - 1) / scan;
  double b = llo + (lhi - llo) * std::min(scan, best + 1) / scan;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(std::exp(c));
  double fd = f(std::exp(d));
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(std::exp(d));
    }
  }
  return std::exp(0.5 * (a + b));
}

inline Mat random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

// Random matrix with prescribed singular values.
inline Mat with_spectrum(int rows, int cols, const Vec& s, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat> qu(random_matrix(rows, rows, rng));
  Eigen::HouseholderQR<Mat> qv(random_matrix(cols, cols, rng));
  const Mat u = qu.householderQ() * Mat::Identity(rows, s.size());
  const Mat v = qv.householderQ() * Mat::Identity(cols, s.size());
  return u * s.asDiagonal() * v.transpose();
}

}  // namespace oracle
