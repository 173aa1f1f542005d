#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace amala {

/// Explicit per-chain random stream. There is no global generator anywhere in
/// the library: every stochastic routine takes one of these by reference.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// SplitMix64 mix of (base, stream); used to derive independent substreams for
/// replicates and per-block sampling so results do not depend on thread count.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace amala
