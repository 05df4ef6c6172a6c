#include "csde/app/tasks.hpp"

#include <algorithm>
#include <cmath>

#include "csde/errors.hpp"

namespace csde::app {
namespace {

GaussianMixture domain_mixture(const SyntheticTaskSpec& spec, double domain_center) {
  GaussianMixture mix;
  mix.weights = {0.5, 0.5};
  for (double sign : {1.0, -1.0}) {
    Vector mean(SyntheticTask::kDim);
    // Invariant block alternates sign so the two components differ in direction, not only offset.
    for (Eigen::Index i = 0; i < SyntheticTask::kInvariantDims; ++i)
      mean[i] = sign * spec.invariant_offset * (i % 2 == 0 ? 1.0 : -1.0);
    for (Eigen::Index i = SyntheticTask::kInvariantDims; i < SyntheticTask::kDim; ++i) mean[i] = domain_center;
    mix.means.push_back(mean);
    mix.variances.push_back(Vector::Constant(SyntheticTask::kDim, spec.variance));
  }
  mix.validate();
  return mix;
}

}  // namespace

SyntheticTask SyntheticTask::make(const SyntheticTaskSpec& spec) {
  if (!(spec.variance > 0.0)) throw ConfigError("mixture variance must be positive");
  SyntheticTask task;
  task.source = domain_mixture(spec, -spec.domain_offset);
  task.target = domain_mixture(spec, spec.domain_offset);
  task.invariant_mask.assign(kDim, false);
  for (Eigen::Index i = 0; i < kInvariantDims; ++i) task.invariant_mask[i] = true;
  return task;
}

ImageParams draw_image_params(const ImageTaskSpec& spec, Rng& rng) {
  ImageParams p;
  p.extent = rng.uniform(spec.min_extent, spec.max_extent);
  const double lo = p.extent;
  const double hi = spec.side - p.extent;
  p.center_row = rng.uniform(lo, hi);
  p.center_col = rng.uniform(lo, hi);
  p.intensity = rng.uniform(spec.min_intensity, spec.max_intensity);
  return p;
}

Vector render_image(const ImageTaskSpec& spec, Domain domain, const ImageParams& p) {
  if (spec.side < 1) throw ConfigError("image side must be positive");
  Vector img = Vector::Zero(static_cast<Eigen::Index>(spec.side) * spec.side);
  for (int r = 0; r < spec.side; ++r) {
    for (int c = 0; c < spec.side; ++c) {
      // pixel centres at integer + 0.5
      const double dr = r + 0.5 - p.center_row;
      const double dc = c + 0.5 - p.center_col;
      const bool inside = domain == Domain::kSource ? dr * dr + dc * dc <= p.extent * p.extent
                                                    : std::abs(dr) <= p.extent && std::abs(dc) <= p.extent;
      if (inside) img[r * spec.side + c] = std::clamp(p.intensity, 0.0, 1.0);
    }
  }
  return img;
}

TaskData generate_gmm_data(const SyntheticTask& task, Domain domain, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate_task_data: n must be >= 1");
  Rng rng(seed);
  const GaussianMixture& mix = domain == Domain::kSource ? task.source : task.target;
  return {gmm_sample_n(mix, n, rng), task.invariant_mask};
}

TaskData generate_image_data(const ImageTaskSpec& spec, Domain domain, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate_task_data: n must be >= 1");
  Rng rng(seed);
  TaskData out;
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.samples.push_back(render_image(spec, domain, draw_image_params(spec, rng)));
  return out;
}

}  // namespace csde::app
