#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace csde {

/// Seeded random source. Thin wrapper over mt19937_64 so every consumer draws
/// normals and uniforms the same way.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Purposes of the child streams used by the samplers.
enum class StreamPurpose : std::uint64_t { kStart = 1, kSourcePerturb = 2, kStepNoise = 3, kData = 4 };

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based stream derivation: the stream for (seed, item, step, purpose)
/// does not depend on how many draws any other stream consumed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t item, std::uint64_t step,
                          StreamPurpose purpose);

inline Rng child_rng(std::uint64_t seed, std::uint64_t item, std::uint64_t step, StreamPurpose purpose) {
  return Rng(derive_seed(seed, item, step, purpose));
}

}  // namespace csde
