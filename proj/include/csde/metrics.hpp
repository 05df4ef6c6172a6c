#pragma once

#include <vector>

#include "csde/gmm.hpp"
#include "csde/sde.hpp"

namespace csde {

/// Euclidean norm of a - b.
double l2_metric(const Vector& a, const Vector& b);

/// 10 log10(max^2 / MSE); +infinity for identical inputs.
double psnr(const Vector& a, const Vector& b, double max_val = 1.0);

/// Mean structural similarity over all valid window x window placements of
/// two square row-major images, uniform weights, population moments,
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = max_val.
double ssim(const Vector& a, const Vector& b, Eigen::Index window = 7, double max_val = 1.0);

/// L2 over the coordinates whose mask entry is true. Empty mask is a ConfigError.
double invariant_l2(const Vector& x0, const Vector& y0, const std::vector<bool>& mask);

/// Mean of -log p(y) under the clean (t = 0) mixture.
double target_nll(const std::vector<Vector>& samples, const GaussianMixture& target);

/// Median of all pairwise Euclidean distances within the pooled set.
double median_pairwise_distance(const std::vector<Vector>& x, const std::vector<Vector>& y);

/// Squared MMD with k(a, b) = exp(-|a - b|^2 / (2 h^2)). The unbiased form
/// drops the diagonal terms and can dip slightly below zero. `bandwidth` <= 0
/// selects the median heuristic on the pooled samples.
double mmd(const std::vector<Vector>& x, const std::vector<Vector>& y, double bandwidth = 0.0, bool unbiased = true);

}  // namespace csde
