#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace riskreg {

// Exit codes shared by the C API and the CLI.
enum class ErrorKind { input = 2, degenerate = 3, convergence = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed arguments, unknown names, dimension mismatches, non-finite input.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Data that carries no usable signal, e.g. an estimated data norm <= 0.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error(ErrorKind::degenerate, what) {}
};

/// An iterative method stopped before meeting its tolerance. `trail` holds the
/// last iterate (a vector for solvers, the iterate history for fixed points).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trail)
      : Error(ErrorKind::convergence, what), trail_(std::move(trail)) {}
  const std::vector<double>& trail() const noexcept { return trail_; }

 private:
  std::vector<double> trail_;
};

}  // namespace riskreg
