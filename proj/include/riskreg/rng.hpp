#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace riskreg {

/// Stream tags keep noise, probe and start-vector draws disjoint for one seed.
enum class StreamTag : std::uint16_t { noise = 1, probe = 2, power_start = 3, test = 15 };

/// Philox4x32-10 counter-based generator. Every draw is a pure function of
/// (seed, stream, index), so results never depend on evaluation order or on
/// how work is split between threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t stream);

  std::array<std::uint32_t, 4> block(std::uint64_t counter) const;

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t index) const;
  /// Standard normal; two consecutive indices share one Box-Muller block.
  double normal(std::uint64_t index) const;
  /// +1 or -1 with equal probability.
  double rademacher(std::uint64_t index) const;

  Eigen::VectorXd normal_vector(Eigen::Index size) const;
  Eigen::VectorXd rademacher_vector(Eigen::Index size) const;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
};

}  // namespace riskreg
