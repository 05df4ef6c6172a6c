#include "csde/gmm.hpp"

#include <cmath>
#include <limits>

namespace csde {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Per-component log N(y; m mu_k, m^2 var_k + sigma^2) and the residual
// precision-weighted vector -(y - m mu_k) / var_t that forms the component score.
struct ComponentTerms {
  std::vector<double> log_joint;  // log w_k + log N_k(y)
  std::vector<Vector> score;      // grad_y log N_k(y)
};

ComponentTerms component_terms(const GaussianMixture& mix, const NoiseSchedule& schedule, const Vector& y,
                               double t) {
  const double m = mean_coeff(schedule, t);
  const double s = marginal_std(schedule, t);
  if (y.size() != mix.dim()) throw ConfigError("sample dimension does not match mixture");
  ComponentTerms out;
  out.log_joint.reserve(mix.size());
  out.score.reserve(mix.size());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    const Vector var_t = (m * m) * mix.variances[k].array() + s * s;
    const Vector resid = y - m * mix.means[k];
    const double quad = (resid.array().square() / var_t.array()).sum();
    const double log_det = var_t.array().log().sum();
    out.log_joint.push_back(std::log(mix.weights[k]) - 0.5 * (quad + log_det + y.size() * kLog2Pi));
    out.score.push_back(-(resid.array() / var_t.array()).matrix());
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace

void GaussianMixture::validate() const {
  if (weights.empty()) throw ConfigError("mixture has no components");
  if (means.size() != weights.size() || variances.size() != weights.size())
    throw ConfigError("mixture weights/means/variances have different lengths");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0.0)) throw ConfigError("mixture weights must be positive");
    total += weights[k];
    if (means[k].size() != dim() || variances[k].size() != dim())
      throw ConfigError("mixture components have inconsistent dimension");
    if (!(variances[k].array() > 0.0).all()) throw ConfigError("mixture variances must be positive");
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

double gmm_log_density_t(const GaussianMixture& mix, const NoiseSchedule& schedule, const Vector& y, double t) {
  return log_sum_exp(component_terms(mix, schedule, y, t).log_joint);
}

std::vector<double> gmm_responsibilities_t(const GaussianMixture& mix, const NoiseSchedule& schedule,
                                           const Vector& y, double t) {
  auto terms = component_terms(mix, schedule, y, t);
  const double norm = log_sum_exp(terms.log_joint);
  std::vector<double> gamma(mix.size());
  for (std::size_t k = 0; k < mix.size(); ++k) gamma[k] = std::exp(terms.log_joint[k] - norm);
  return gamma;
}

Vector gmm_score_t(const GaussianMixture& mix, const NoiseSchedule& schedule, const Vector& y, double t) {
  auto terms = component_terms(mix, schedule, y, t);
  const double norm = log_sum_exp(terms.log_joint);
  Vector score = Vector::Zero(y.size());
  for (std::size_t k = 0; k < mix.size(); ++k) score += std::exp(terms.log_joint[k] - norm) * terms.score[k];
  return score;
}

Vector gmm_sample(const GaussianMixture& mix, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(mix.weights.begin(), mix.weights.end());
  const std::size_t k = pick(rng.engine());
  Vector x(mix.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = mix.means[k][i] + std::sqrt(mix.variances[k][i]) * rng.normal();
  return x;
}

std::vector<Vector> gmm_sample_n(const GaussianMixture& mix, std::size_t n, Rng& rng) {
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gmm_sample(mix, rng));
  return out;
}

}  // namespace csde
