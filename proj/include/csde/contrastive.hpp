#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "csde/adam.hpp"
#include "csde/encoder.hpp"
#include "csde/rng.hpp"
#include "csde/sde.hpp"

namespace csde {

/// Keeps the coordinates whose mask entry is true and zeroes the rest.
struct CoordinateProjection {
  std::vector<bool> mask;
};

/// Block-averages factor x factor patches of a square image (row-major,
/// side = sqrt(size)) and replicates each mean back over its block.
struct LowPass {
  int factor = 4;
};

using InvariantTransform = std::variant<CoordinateProjection, LowPass>;

/// Domain-invariant view of `x`. Idempotent.
Vector invariant_view(const InvariantTransform& transform, const Vector& x);

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t pairs_per_batch = 32;  // K; the batch holds 2K views
  double learning_rate = 3e-4;
  double weight_decay = 0.05;
  double temperature = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, weight_decay, beta1, beta2, epsilon}; }

  bool operator==(const TrainConfig&) const = default;
};

/// Views ordered (x_1, xbar_1, x_2, xbar_2, ...) as columns of `inputs`;
/// both views of pair k share times[2k] == times[2k+1].
struct PairBatch {
  Matrix inputs;
  std::vector<double> times;
  std::vector<std::size_t> source_index;  // one per pair
  Matrix noise;                           // the standard normal draws used by perturb
};

/// Draws K samples (without replacement unless K exceeds the pool), a time
/// t_k ~ U(1e-3, T) per pair, and perturbs both views to t_k with independent
/// noise. `fixed_time` overrides the time draw.
PairBatch make_pair_batch(const std::vector<Vector>& data, const InvariantTransform& transform,
                          const NoiseSchedule& schedule, std::size_t pairs, Rng& rng,
                          std::optional<double> fixed_time = std::nullopt);

/// Mean over all 2K anchors of -log softmax of the positive cosine similarity,
/// columns of `z` being the projections in pair order.
double nt_xent_loss(const Matrix& z, double temperature);

/// Exact gradient of nt_xent_loss with respect to every column of `z`.
Matrix nt_xent_grad(const Matrix& z, double temperature);

struct NtXent {
  double loss;
  Matrix grad;
};

NtXent nt_xent(const Matrix& z, double temperature);

struct EncoderTraining {
  EncoderParams params;
  std::vector<double> losses;  // one per iteration
};

/// Initialises F from `rng`, then runs `config.iterations` Adam steps on the
/// NT-Xent loss of freshly drawn pair batches.
EncoderTraining train_encoder(const std::vector<Vector>& data, const InvariantTransform& transform,
                              const NoiseSchedule& schedule, const EncoderConfig& encoder_config,
                              const TrainConfig& config, Rng& rng);

}  // namespace csde
