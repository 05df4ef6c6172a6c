#pragma once

#include <cstdint>
#include <vector>

#include "csde/contrastive.hpp"
#include "csde/gmm.hpp"

namespace csde::app {

/// Shape parameters of the synthetic mixtures. Every component has the same
/// isotropic variance.
struct SyntheticTaskSpec {
  double invariant_offset = 1.5;  // |mean| of the invariant coordinates
  double domain_offset = 2.0;     // specific coordinates sit at -offset (source) / +offset (target)
  double variance = 0.25;

  bool operator==(const SyntheticTaskSpec&) const = default;
};

/// Eight-dimensional two-domain mixture. Coordinates 0-3 carry content shared
/// by both domains (identical mixture structure); coordinates 4-7 carry the
/// domain: centred at -2 in the source and +2 in the target.
struct SyntheticTask {
  static constexpr Eigen::Index kDim = 8;
  static constexpr Eigen::Index kInvariantDims = 4;

  GaussianMixture source;
  GaussianMixture target;
  std::vector<bool> invariant_mask;

  static SyntheticTask make(const SyntheticTaskSpec& spec);
  static SyntheticTask standard() { return make({}); }
  CoordinateProjection transform() const { return {invariant_mask}; }
};

/// Parameters of the procedural image domains: source images are filled
/// discs, target images filled squares; position, size and intensity are drawn
/// from the same distribution in both domains.
struct ImageTaskSpec {
  int side = 16;
  double min_extent = 2.5;  // disc radius / square half-side, pixels
  double max_extent = 4.0;
  double min_intensity = 0.5;
  double max_intensity = 1.0;

  bool operator==(const ImageTaskSpec&) const = default;
};

enum class Domain { kSource, kTarget };

struct ImageParams {
  double center_row;
  double center_col;
  double extent;
  double intensity;
};

ImageParams draw_image_params(const ImageTaskSpec& spec, Rng& rng);
Vector render_image(const ImageTaskSpec& spec, Domain domain, const ImageParams& params);

struct TaskData {
  std::vector<Vector> samples;
  std::vector<bool> invariant_mask;  // empty for images
};

TaskData generate_gmm_data(const SyntheticTask& task, Domain domain, std::size_t n, std::uint64_t seed);
TaskData generate_image_data(const ImageTaskSpec& spec, Domain domain, std::size_t n, std::uint64_t seed);

}  // namespace csde::app
