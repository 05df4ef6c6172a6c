#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "csde/encoder.hpp"
#include "csde/sde.hpp"

namespace csde {

enum class Similarity { kCosine, kNegL2 };

std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view text);

/// Knobs of the guided sampler: Q = -lambda S, start time P, R reverse steps
/// of size l = P / R.
struct GuidanceConfig {
  double lambda = 500.0;
  Similarity similarity = Similarity::kCosine;
  double initial_time = 0.5;
  std::size_t steps = 500;

  void validate(double horizon = 1.0) const;
  double step_size() const { return initial_time / static_cast<double>(steps); }

  bool operator==(const GuidanceConfig&) const = default;
};

/// Cosine of two feature vectors. With an MLP trunk the feature map has a
/// single spatial position, so the spatial mean of per-position cosines is
/// this plain cosine.
double sim_cosine(const Vector& h_t, const Vector& h_0);

/// -|| h_0 - h_t ||^2
double sim_neg_l2(const Vector& h_t, const Vector& h_0);

double similarity(Similarity kind, const Vector& h_t, const Vector& h_0);

/// d S / d h_t, with h_0 held fixed.
Vector similarity_feature_grad(Similarity kind, const Vector& h_t, const Vector& h_0);

/// Q(y, x, t) = -lambda S(F(y, t), F(x, t)).
double guidance_energy(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                       const GuidanceConfig& config);

/// grad_y S(F(y, t), F(x, t)); only the y branch is differentiated.
Vector similarity_input_grad(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                             Similarity kind);

/// grad_y Q = -lambda grad_y S. Exactly zero when lambda == 0.
Vector guidance_grad(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                     const GuidanceConfig& config);

struct GuidanceTerms {
  double similarity;
  Vector grad;  // grad_y Q
};

/// Similarity and grad_y Q from one pair of forward passes.
GuidanceTerms guidance_terms(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                             const GuidanceConfig& config);

}  // namespace csde
