#pragma once

#include <vector>

#include "csde/rng.hpp"
#include "csde/sde.hpp"

namespace csde {

/// Diagonal-covariance Gaussian mixture in R^d.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Vector> variances;

  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t size() const { return weights.size(); }

  /// Throws ConfigError on non-positive weights/variances, weights not summing
  /// to 1 (tol 1e-12), or inconsistent dimensions.
  void validate() const;
};

/// log p_t(y) of the VP-diffused mixture, i.e. the mixture with component k
/// replaced by Normal(m mu_k, m^2 Sigma_k + sigma^2 I). Log-sum-exp stabilised.
double gmm_log_density_t(const GaussianMixture& mix, const NoiseSchedule& schedule, const Vector& y, double t);

/// Exact gradient of gmm_log_density_t with respect to y.
Vector gmm_score_t(const GaussianMixture& mix, const NoiseSchedule& schedule, const Vector& y, double t);

/// Posterior component probabilities at time t.
std::vector<double> gmm_responsibilities_t(const GaussianMixture& mix, const NoiseSchedule& schedule,
                                           const Vector& y, double t);

Vector gmm_sample(const GaussianMixture& mix, Rng& rng);

std::vector<Vector> gmm_sample_n(const GaussianMixture& mix, std::size_t n, Rng& rng);

}  // namespace csde
