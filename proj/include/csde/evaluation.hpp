#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csde/encoder.hpp"
#include "csde/gmm.hpp"
#include "csde/guidance.hpp"
#include "csde/io.hpp"
#include "csde/sampler.hpp"
#include "csde/score.hpp"

namespace csde {

/// Everything needed to translate a source set and score the outputs.
struct EvalTask {
  std::string id;
  std::vector<Vector> sources;
  std::vector<Vector> target_reference;  // target-domain draws for MMD
  std::shared_ptr<const ScoreFunction> score;
  std::shared_ptr<const EncoderParams> encoder;  // may be null for lambda = 0 only
  NoiseSchedule schedule;
  std::vector<bool> invariant_mask;              // empty: no invariant_L2 column
  std::optional<GaussianMixture> target_mixture;  // empty: no target_NLL column
  bool image = false;                             // PSNR/SSIM on clamped [0, 1] outputs
};

/// One metrics CSV row. Optional fields are written as empty cells.
struct MetricsRow {
  std::string task;
  double lambda = 0.0;
  double initial_time = 0.0;
  Similarity similarity = Similarity::kCosine;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double l2 = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> invariant_l2;
  std::optional<double> target_nll;
  double mmd = 0.0;  // unbiased RBF estimate clamped at 0
};

/// A row together with the per-sample values behind its means.
struct CellEvaluation {
  MetricsRow row;
  std::vector<double> l2;
  std::vector<double> invariant_l2;
  std::vector<double> nll;
  std::vector<TranslationResult> results;
};

double mean(const std::vector<double>& v);

/// Sample standard deviation over sqrt(n).
double standard_error(const std::vector<double>& v);

/// translate_batch over task.sources followed by all applicable metrics.
CellEvaluation evaluate(const EvalTask& task, const GuidanceConfig& config, std::uint64_t seed,
                        unsigned threads = 0);

/// Grid of cells. Each similarity carries its own lambda list so that grids
/// like {cosine: 500, 150; neg_l2: 5e-5, 5e-3} are expressible; a full
/// cartesian grid repeats the same list for each similarity.
struct AblationGrid {
  std::vector<std::pair<Similarity, std::vector<double>>> lambdas;
  std::vector<double> initial_times;
  std::size_t steps = 500;

  std::size_t cell_count() const;
};

/// Rows in grid order: similarity, then lambda, then P. Every cell uses the
/// same seed, so cells are paired sample-by-sample.
std::vector<CellEvaluation> ablation_sweep(const EvalTask& task, const AblationGrid& grid, std::uint64_t seed,
                                           unsigned threads = 0);

const std::vector<std::string>& metrics_header();
CsvTable metrics_table(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> rows_of(const std::vector<CellEvaluation>& cells);

}  // namespace csde
