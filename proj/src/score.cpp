#include "csde/score.hpp"

#include <cmath>

#include "csde/errors.hpp"

namespace csde {
namespace {

constexpr double kMinTrainTime = 1e-3;

}  // namespace

Matrix ScoreFunction::score_batch(const Matrix& y, std::span<const double> t) const {
  if (static_cast<Eigen::Index>(t.size()) != y.cols()) throw ConfigError("one time value per batch column required");
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) out.col(j) = score(y.col(j), t[j]);
  return out;
}

AnalyticGmmScore::AnalyticGmmScore(GaussianMixture mixture, NoiseSchedule schedule)
    : mixture_(std::move(mixture)), schedule_(schedule) {
  mixture_.validate();
  schedule_.validate();
}

Vector AnalyticGmmScore::score(const Vector& y, double t) const { return gmm_score_t(mixture_, schedule_, y, t); }

NetScore::NetScore(EncoderParams params, NoiseSchedule schedule) : params_(std::move(params)), schedule_(schedule) {
  const EncoderConfig c = params_.config();
  c.validate();
  if (c.projection_dim() != c.input_dim) throw ConfigError("score network output width must equal its input width");
}

Vector NetScore::score(const Vector& y, double t) const {
  const double sigma = marginal_std(schedule_, t);
  if (!(sigma > 0.0)) throw DomainError("network score is undefined at t = 0");
  return -encode(params_, y, t).z / sigma;
}

EncoderConfig ScoreNetConfig::network(Eigen::Index data_dim) const {
  EncoderConfig c;
  c.input_dim = data_dim;
  c.hidden_widths = hidden_widths;
  c.proj_widths = {head_width, data_dim};
  c.time_embed_dim = time_embed_dim;
  c.validate();
  return c;
}

ScoreNetTraining dsm_train_score_net(const std::vector<Vector>& data, const NoiseSchedule& schedule,
                                     const ScoreNetConfig& config, Rng& rng) {
  if (data.empty()) throw ConfigError("dsm_train_score_net: empty data set");
  if (config.batch_size == 0) throw ConfigError("dsm_train_score_net: batch_size must be >= 1");
  const Eigen::Index d = data.front().size();
  for (const auto& x : data)
    if (x.size() != d) throw ConfigError("dsm_train_score_net: samples have different dimensions");

  EncoderParams params = init_params(config.network(d), rng);
  AdamMoments moments = AdamMoments::zeros_like(params);
  const AdamConfig adam{config.learning_rate, config.weight_decay};
  std::vector<double> losses;
  losses.reserve(config.iterations);

  const auto b = static_cast<Eigen::Index>(config.batch_size);
  Matrix inputs(d, b);
  Matrix noise(d, b);
  std::vector<double> times(config.batch_size);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const Vector& x = data[rng.index(data.size())];
      const double t = rng.uniform(kMinTrainTime, schedule.horizon);
      const Vector eps = rng.normal_vector(d);
      times[j] = t;
      noise.col(j) = eps;
      inputs.col(j) = perturb_with(schedule, x, t, eps);
    }
    const EncodedBatch enc = encode_batch(params, inputs, times);
    // sigma s + eps = eps - eps_hat
    const Matrix resid = noise - enc.z;
    const double loss = resid.squaredNorm() / static_cast<double>(b);
    if (!std::isfinite(loss)) throw TrainingError("denoising score matching loss diverged", it);
    losses.push_back(loss);
    const Matrix grad_z = (-2.0 / static_cast<double>(b)) * resid;
    adam_step(params, backward_params(params, enc.cache, Matrix(), grad_z), moments, adam, it);
  }
  return {std::make_shared<const NetScore>(std::move(params), schedule), std::move(losses)};
}

}  // namespace csde
