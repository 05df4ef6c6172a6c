#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csde/app/tasks.hpp"
#include "csde/contrastive.hpp"
#include "csde/encoder.hpp"
#include "csde/guidance.hpp"
#include "csde/score.hpp"
#include "csde/sde.hpp"

namespace csde::app {

enum class TaskKind { kGmmTranslate, kImageTranslate };
enum class ScoreKind { kAnalytic, kNet };

std::string_view to_string(TaskKind kind);
std::string_view to_string(ScoreKind kind);

/// Guidance strengths calibrated for the synthetic mixture task (features of
/// the small MLP live on a different scale than the image-mode defaults).
inline constexpr double kGmmCosineLambda = 20.0;
inline constexpr double kGmmNegL2Lambda = 3.5;

/// Everything a command needs. Text form is one `key = value` per line with
/// dotted section prefixes; `#` starts a comment. Lists are comma-separated.
struct RunConfig {
  TaskKind task = TaskKind::kImageTranslate;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  NoiseSchedule schedule;

  std::size_t n_train = 4000;  // per domain
  std::size_t n_eval = 200;
  std::size_t n_reference = 500;
  SyntheticTaskSpec mixture;
  ImageTaskSpec image;
  int low_pass_factor = 4;

  EncoderConfig encoder;  // input_dim is filled from the task
  TrainConfig train;

  ScoreKind score_kind = ScoreKind::kNet;
  ScoreNetConfig score;

  GuidanceConfig guidance;

  std::vector<double> ablate_lambdas_cosine{500.0, 150.0};
  std::vector<double> ablate_lambdas_neg_l2{5e-05, 5e-03};
  std::vector<double> ablate_P{0.5};
  std::vector<double> sweep_P{0.3, 0.5, 0.7};

  std::optional<std::filesystem::path> encoder_path;  // default <out>/encoder.ckpt
  std::optional<std::filesystem::path> score_path;    // default <out>/score.ckpt

  /// Defaults for a task. Image mode uses the paper's guidance settings
  /// (lambda = 500, P = 0.5); the mixture task uses the calibrated lambdas.
  static RunConfig defaults(TaskKind task);

  /// Parses `text` on top of defaults(task), where task is the file's `task`
  /// key (image_translate when absent). `overrides` are applied last.
  /// Unknown keys, malformed values and missing referenced files are ConfigErrors.
  static RunConfig parse(std::string_view text, const std::vector<std::string>& overrides = {});

  void set(std::string_view key, std::string_view value);

  /// Every key, in a fixed order; parse(serialize()) reproduces *this.
  std::string serialize() const;

  void validate() const;

  Eigen::Index data_dim() const;
  EncoderConfig encoder_config() const;
  InvariantTransform transform() const;
  std::filesystem::path encoder_checkpoint() const { return encoder_path.value_or(out / "encoder.ckpt"); }
  std::filesystem::path score_checkpoint() const { return score_path.value_or(out / "score.ckpt"); }

  bool operator==(const RunConfig&) const = default;
};

/// Splits "key=value"; throws ConfigError without '='.
std::pair<std::string, std::string> split_assignment(std::string_view text);

}  // namespace csde::app
