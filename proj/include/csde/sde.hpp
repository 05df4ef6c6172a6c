#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "csde/errors.hpp"
#include "csde/rng.hpp"

namespace csde {

using Vector = Eigen::VectorXd;

/// Variance-preserving forward SDE with a linear rate
///   beta(t) = beta_min + t (beta_max - beta_min) / T,
///   dy = -1/2 beta(t) y dt + sqrt(beta(t)) dw.
/// The perturbation kernel is Normal(m(t) y0, sigma(t)^2 I) with m^2 + sigma^2 = 1.
struct NoiseSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  double horizon = 1.0;

  /// Throws ConfigError unless 0 < beta_min <= beta_max and horizon > 0.
  void validate() const;

  bool operator==(const NoiseSchedule&) const = default;
};

/// A sample being denoised together with its current time.
struct DiffusionState {
  Vector y;
  double t = 0.0;
};

double beta(const NoiseSchedule& schedule, double t);

/// m(t) = exp(-1/2 int_0^t beta(s) ds), closed form for the linear schedule.
double mean_coeff(const NoiseSchedule& schedule, double t);

/// sigma(t) = sqrt(1 - m(t)^2), evaluated as sqrt(-expm1(-int beta)) for accuracy near t = 0.
double marginal_std(const NoiseSchedule& schedule, double t);

/// Draw from q_{t|0}(. | x0). Returns x0 exactly at t = 0.
Vector perturb(const NoiseSchedule& schedule, const Vector& x0, double t, Rng& rng);

/// Same as perturb() with caller-supplied standard normal noise.
Vector perturb_with(const NoiseSchedule& schedule, const Vector& x0, double t, const Vector& eps);

/// f(y, t) = -1/2 beta(t) y
Vector drift(const NoiseSchedule& schedule, const Vector& y, double t);

/// g(t) = sqrt(beta(t))
double diffusion(const NoiseSchedule& schedule, double t);

/// One guided reverse Euler-Maruyama step of size l:
///   y - [f(y,t) - g(t)^2 (score - guidance_grad)] l + g(t) sqrt(l) z.
/// `step` is only used to label a NumericalError.
Vector euler_step(const NoiseSchedule& schedule, const Vector& y, double t, double l, const Vector& score,
                  const Vector& guidance_grad, const Vector& z,
                  std::size_t step = NumericalError::npos);

/// The unguided discretisation y - [f(y,t) - g(t)^2 score] l + g(t) sqrt(l) z.
Vector unguided_step(const NoiseSchedule& schedule, const Vector& y, double t, double l, const Vector& score,
                     const Vector& z, std::size_t step = NumericalError::npos);

}  // namespace csde
