#pragma once

#include <memory>
#include <span>
#include <vector>

#include "csde/adam.hpp"
#include "csde/encoder.hpp"
#include "csde/gmm.hpp"
#include "csde/sde.hpp"

namespace csde {

/// s(y, t) ~ grad_y log p_t(y). Implementations are immutable after construction.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  virtual Vector score(const Vector& y, double t) const = 0;
  virtual Eigen::Index dim() const = 0;

  /// Column-wise score; each column is evaluated through score() so results
  /// match the single-sample path exactly.
  Matrix score_batch(const Matrix& y, std::span<const double> t) const;
};

/// Exact score of a Gaussian mixture diffused by the VP kernel.
class AnalyticGmmScore final : public ScoreFunction {
 public:
  AnalyticGmmScore(GaussianMixture mixture, NoiseSchedule schedule);

  Vector score(const Vector& y, double t) const override;
  Eigen::Index dim() const override { return mixture_.dim(); }

  const GaussianMixture& mixture() const { return mixture_; }

 private:
  GaussianMixture mixture_;
  NoiseSchedule schedule_;
};

/// Noise-prediction network: the encoder architecture with a head whose last
/// width equals the data dimension, read as eps_hat; s = -eps_hat / sigma(t).
class NetScore final : public ScoreFunction {
 public:
  NetScore(EncoderParams params, NoiseSchedule schedule);

  Vector score(const Vector& y, double t) const override;
  Eigen::Index dim() const override { return params_.config().input_dim; }

  const EncoderParams& params() const { return params_; }

 private:
  EncoderParams params_;
  NoiseSchedule schedule_;
};

struct ScoreNetConfig {
  std::vector<Eigen::Index> hidden_widths{128, 128};
  Eigen::Index head_width = 128;  // hidden head layer; the output layer has the data width
  Eigen::Index time_embed_dim = 32;
  std::size_t iterations = 4000;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;

  EncoderConfig network(Eigen::Index data_dim) const;

  bool operator==(const ScoreNetConfig&) const = default;
};

struct ScoreNetTraining {
  std::shared_ptr<const NetScore> score;
  std::vector<double> losses;
};

/// Denoising score matching, E || sigma(t) s(x_t, t) + eps ||^2 with
/// t ~ U(1e-3, T). Throws TrainingError on a non-finite loss.
ScoreNetTraining dsm_train_score_net(const std::vector<Vector>& data, const NoiseSchedule& schedule,
                                     const ScoreNetConfig& config, Rng& rng);

}  // namespace csde
