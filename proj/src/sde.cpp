#include "csde/sde.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace csde {
namespace {

void check_time(const NoiseSchedule& schedule, double t) {
  if (!(t >= 0.0 && t <= schedule.horizon)) {
    std::ostringstream os;
    os << "time " << t << " outside [0, " << schedule.horizon << "]";
    throw DomainError(os.str());
  }
}

// int_0^t beta(s) ds
double integrated_beta(const NoiseSchedule& s, double t) {
  return s.beta_min * t + 0.5 * (s.beta_max - s.beta_min) * t * t / s.horizon;
}

void check_finite(const Vector& v, const char* name, std::size_t step) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "non-finite " << name;
    if (step != NumericalError::npos) os << " at step " << step;
    os << " (|.|max = " << v.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str(), step);
  }
}

}  // namespace

void NoiseSchedule::validate() const {
  if (!(beta_min > 0.0 && beta_min <= beta_max && std::isfinite(beta_max)))
    throw ConfigError("noise schedule requires 0 < beta_min <= beta_max");
  if (!(horizon > 0.0)) throw ConfigError("noise schedule horizon must be positive");
}

double beta(const NoiseSchedule& schedule, double t) {
  check_time(schedule, t);
  return schedule.beta_min + t * (schedule.beta_max - schedule.beta_min) / schedule.horizon;
}

double mean_coeff(const NoiseSchedule& schedule, double t) {
  check_time(schedule, t);
  return std::exp(-0.5 * integrated_beta(schedule, t));
}

double marginal_std(const NoiseSchedule& schedule, double t) {
  check_time(schedule, t);
  return std::sqrt(-std::expm1(-integrated_beta(schedule, t)));
}

Vector perturb(const NoiseSchedule& schedule, const Vector& x0, double t, Rng& rng) {
  return perturb_with(schedule, x0, t, rng.normal_vector(x0.size()));
}

Vector perturb_with(const NoiseSchedule& schedule, const Vector& x0, double t, const Vector& eps) {
  if (t == 0.0) {
    check_time(schedule, t);
    return x0;
  }
  return mean_coeff(schedule, t) * x0 + marginal_std(schedule, t) * eps;
}

Vector drift(const NoiseSchedule& schedule, const Vector& y, double t) {
  return (-0.5 * beta(schedule, t)) * y;
}

double diffusion(const NoiseSchedule& schedule, double t) { return std::sqrt(beta(schedule, t)); }

Vector euler_step(const NoiseSchedule& schedule, const Vector& y, double t, double l, const Vector& score,
                  const Vector& guidance_grad, const Vector& z, std::size_t step) {
  if (!(l > 0.0)) throw DomainError("step size must be positive");
  check_finite(score, "score", step);
  check_finite(guidance_grad, "guidance gradient", step);
  const double g = diffusion(schedule, t);
  const Vector effective = score - guidance_grad;
  return y - (drift(schedule, y, t) - (g * g) * effective) * l + (g * std::sqrt(l)) * z;
}

Vector unguided_step(const NoiseSchedule& schedule, const Vector& y, double t, double l, const Vector& score,
                     const Vector& z, std::size_t step) {
  if (!(l > 0.0)) throw DomainError("step size must be positive");
  check_finite(score, "score", step);
  const double g = diffusion(schedule, t);
  const Vector effective = score;
  return y - (drift(schedule, y, t) - (g * g) * effective) * l + (g * std::sqrt(l)) * z;
}

}  // namespace csde
