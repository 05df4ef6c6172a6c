#pragma once

#include <cstddef>
#include <span>

#include "csde/encoder.hpp"

namespace csde {

struct AdamConfig {
  double learning_rate = 3e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam followed by decoupled decay p <- p (1 - lr wd).
/// `iteration` is 1-based. Throws TrainingError on non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, const AdamConfig& config, std::size_t iteration);

struct AdamMoments {
  EncoderParams first;
  EncoderParams second;

  static AdamMoments zeros_like(const EncoderParams& params);
};

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamMoments& moments, const AdamConfig& config,
               std::size_t iteration);

}  // namespace csde
