#include "csde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csde/errors.hpp"

namespace csde {
namespace {

void check_same_shape(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ConfigError("metric arguments have different shapes");
}

Eigen::Index image_side(const Vector& a) {
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(a.size()))));
  if (side * side != a.size()) throw ConfigError("image metrics expect a square image");
  return side;
}

double kernel_sum(const std::vector<Vector>& a, const std::vector<Vector>& b, double inv_two_h2, bool same) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = same ? i + 1 : 0; j < b.size(); ++j)
      acc += std::exp(-(a[i] - b[j]).squaredNorm() * inv_two_h2);
  return same ? 2.0 * acc : acc;
}

}  // namespace

double l2_metric(const Vector& a, const Vector& b) {
  check_same_shape(a, b);
  return (a - b).norm();
}

double psnr(const Vector& a, const Vector& b, double max_val) {
  check_same_shape(a, b);
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(const Vector& a, const Vector& b, Eigen::Index window, double max_val) {
  check_same_shape(a, b);
  const Eigen::Index side = image_side(a);
  if (window < 1 || window > side) throw ConfigError("SSIM window larger than the image");
  const double c1 = (0.01 * max_val) * (0.01 * max_val);
  const double c2 = (0.03 * max_val) * (0.03 * max_val);
  const double n = static_cast<double>(window * window);

  double total = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index r0 = 0; r0 + window <= side; ++r0) {
    for (Eigen::Index c0 = 0; c0 + window <= side; ++c0) {
      double mu_a = 0.0, mu_b = 0.0;
      for (Eigen::Index r = r0; r < r0 + window; ++r)
        for (Eigen::Index c = c0; c < c0 + window; ++c) {
          mu_a += a[r * side + c];
          mu_b += b[r * side + c];
        }
      mu_a /= n;
      mu_b /= n;
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (Eigen::Index r = r0; r < r0 + window; ++r)
        for (Eigen::Index c = c0; c < c0 + window; ++c) {
          const double da = a[r * side + c] - mu_a;
          const double db = b[r * side + c] - mu_b;
          var_a += da * da;
          var_b += db * db;
          cov += da * db;
        }
      var_a /= n;
      var_b /= n;
      cov /= n;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double invariant_l2(const Vector& x0, const Vector& y0, const std::vector<bool>& mask) {
  check_same_shape(x0, y0);
  if (static_cast<Eigen::Index>(mask.size()) != x0.size()) throw ConfigError("invariant mask length mismatch");
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
    throw ConfigError("invariant mask selects no coordinates");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (mask[i]) acc += (x0[i] - y0[i]) * (x0[i] - y0[i]);
  return std::sqrt(acc);
}

double target_nll(const std::vector<Vector>& samples, const GaussianMixture& target) {
  if (samples.empty()) throw ConfigError("target_nll: empty sample set");
  const NoiseSchedule schedule;
  double acc = 0.0;
  for (const auto& y : samples) acc -= gmm_log_density_t(target, schedule, y, 0.0);
  return acc / static_cast<double>(samples.size());
}

double median_pairwise_distance(const std::vector<Vector>& x, const std::vector<Vector>& y) {
  std::vector<const Vector*> pool;
  for (const auto& v : x) pool.push_back(&v);
  for (const auto& v : y) pool.push_back(&v);
  std::vector<double> d;
  d.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) d.push_back((*pool[i] - *pool[j]).norm());
  if (d.empty()) throw ConfigError("median heuristic needs at least two samples");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double mmd(const std::vector<Vector>& x, const std::vector<Vector>& y, double bandwidth, bool unbiased) {
  if (x.empty() || y.empty()) throw ConfigError("mmd: empty sample set");
  if (unbiased && (x.size() < 2 || y.size() < 2)) throw ConfigError("unbiased mmd needs at least two samples per set");
  const double h = bandwidth > 0.0 ? bandwidth : median_pairwise_distance(x, y);
  if (!(h > 0.0)) throw NumericalError("mmd: degenerate bandwidth");
  const double inv = 1.0 / (2.0 * h * h);
  const auto m = static_cast<double>(x.size());
  const auto n = static_cast<double>(y.size());
  const double kxx = kernel_sum(x, x, inv, true);
  const double kyy = kernel_sum(y, y, inv, true);
  const double kxy = kernel_sum(x, y, inv, false);
  if (unbiased) return kxx / (m * (m - 1.0)) + kyy / (n * (n - 1.0)) - 2.0 * kxy / (m * n);
  // Biased (V-statistic) form includes the k(a, a) = 1 diagonal.
  return (kxx + m) / (m * m) + (kyy + n) / (n * n) - 2.0 * kxy / (m * n);
}

}  // namespace csde
