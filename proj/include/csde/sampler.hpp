#pragma once

#include <cstdint>
#include <vector>

#include "csde/encoder.hpp"
#include "csde/guidance.hpp"
#include "csde/score.hpp"
#include "csde/sde.hpp"

namespace csde {

struct StepRecord {
  double t;
  double similarity;     // S(F(y,t), F(x,t)) before the update; NaN without an encoder
  double guidance_norm;  // || grad_y Q ||
};

struct TranslationResult {
  Vector output;  // y_0
  Vector start;   // y after the initial perturbation to time P
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  std::uint64_t item = 0;
  GuidanceConfig config;
};

/// Guided translation of one source sample:
///   y ~ q_{P|0}(. | x0), l = P / R
///   for i = R..1: t = i l, x ~ q_{t|0}(. | x0),
///                 y <- y - [f(y,t) - g^2 (s(y,t) - grad_y Q(y,x,t))] l + g sqrt(l) z
/// with z = 0 on the final step. Random draws come from per-(item, step)
/// child streams of `seed`, so runs that differ only in lambda or similarity
/// see identical perturbations and noise. `encoder` may be null when lambda is 0.
TranslationResult translate(const Vector& x0, const ScoreFunction& score, const EncoderParams* encoder,
                            const GuidanceConfig& config, const NoiseSchedule& schedule, std::uint64_t seed,
                            std::uint64_t item = 0);

/// Reference SDEdit-style sampler without any guidance machinery; shares the
/// random streams of translate().
Vector sample_unguided(const Vector& x0, const ScoreFunction& score, double initial_time, std::size_t steps,
                       const NoiseSchedule& schedule, std::uint64_t seed, std::uint64_t item = 0);

/// Element k equals translate(x0s[k], ..., seed, k). Items run on up to
/// `threads` workers (0 = CSDE_THREADS or hardware concurrency); results do
/// not depend on the thread count.
std::vector<TranslationResult> translate_batch(const std::vector<Vector>& x0s, const ScoreFunction& score,
                                               const EncoderParams* encoder, const GuidanceConfig& config,
                                               const NoiseSchedule& schedule, std::uint64_t seed,
                                               unsigned threads = 0);

/// Worker count from CSDE_THREADS, falling back to hardware concurrency.
unsigned default_thread_count();

}  // namespace csde
