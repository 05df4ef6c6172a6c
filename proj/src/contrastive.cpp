#include "csde/contrastive.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "csde/errors.hpp"

namespace csde {
namespace {

constexpr double kMinTrainTime = 1e-3;

Vector low_pass(const Vector& x, int factor) {
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(x.size()))));
  if (side * side != x.size()) throw ConfigError("low_pass expects a square image");
  if (factor < 1 || side % factor != 0)
    throw ConfigError("low_pass factor " + std::to_string(factor) + " does not divide image side " +
                      std::to_string(side));
  Vector out(x.size());
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (Eigen::Index br = 0; br < side; br += factor) {
    for (Eigen::Index bc = 0; bc < side; bc += factor) {
      double sum = 0.0;
      for (Eigen::Index r = br; r < br + factor; ++r)
        for (Eigen::Index c = bc; c < bc + factor; ++c) sum += x[r * side + c];
      const double mean = sum * inv;
      for (Eigen::Index r = br; r < br + factor; ++r)
        for (Eigen::Index c = bc; c < bc + factor; ++c) out[r * side + c] = mean;
    }
  }
  return out;
}

// Shared forward pass: normalised columns, similarity matrix and row-wise
// softmax over k != i.
struct Similarities {
  Matrix unit;
  Vector norms;
  Matrix sim;
  Matrix prob;  // zero diagonal
  double loss;
};

Similarities similarities(const Matrix& z, double temperature) {
  const Eigen::Index n = z.cols();
  if (n < 2 || n % 2 != 0) throw ConfigError("NT-Xent needs an even number (>= 2) of projections");
  if (!(temperature > 0.0)) throw ConfigError("NT-Xent temperature must be positive");
  Similarities s;
  s.norms = z.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(s.norms[i] > 0.0) || !std::isfinite(s.norms[i]))
      throw NumericalError("NT-Xent: projection " + std::to_string(i) + " has zero or non-finite norm");
  s.unit = z * s.norms.cwiseInverse().asDiagonal();
  s.sim = s.unit.transpose() * s.unit;
  s.prob = Matrix::Zero(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) hi = std::max(hi, s.sim(i, k) / temperature);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) acc += (s.prob(i, k) = std::exp(s.sim(i, k) / temperature - hi));
    s.prob.row(i) /= acc;
    const Eigen::Index partner = i ^ 1;
    total += (hi + std::log(acc)) - s.sim(i, partner) / temperature;
  }
  s.loss = total / static_cast<double>(n);
  return s;
}

Matrix gradient(const Similarities& s, double temperature) {
  const Eigen::Index n = s.unit.cols();
  // d loss / d sim(i,k) from anchor i's term.
  Matrix a = s.prob;
  for (Eigen::Index i = 0; i < n; ++i) a(i, i ^ 1) -= 1.0;
  a /= temperature * static_cast<double>(n);
  const Matrix sym = a + a.transpose();
  const Matrix grad_unit = s.unit * sym;
  Matrix grad(s.unit.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = s.unit.col(i);
    grad.col(i) = (grad_unit.col(i) - u * u.dot(grad_unit.col(i))) / s.norms[i];
  }
  return grad;
}

}  // namespace

Vector invariant_view(const InvariantTransform& transform, const Vector& x) {
  return std::visit(
      [&x](const auto& tf) -> Vector {
        using T = std::decay_t<decltype(tf)>;
        if constexpr (std::is_same_v<T, CoordinateProjection>) {
          if (static_cast<Eigen::Index>(tf.mask.size()) != x.size())
            throw ConfigError("projection mask length does not match sample dimension");
          Vector out = x;
          for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!tf.mask[i]) out[i] = 0.0;
          return out;
        } else {
          return low_pass(x, tf.factor);
        }
      },
      transform);
}

void TrainConfig::validate() const {
  if (pairs_per_batch < 2) throw ConfigError("train: pairs_per_batch must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("train: temperature must be positive");
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("train: negative learning rate or decay");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw ConfigError("train: invalid Adam constants");
}

PairBatch make_pair_batch(const std::vector<Vector>& data, const InvariantTransform& transform,
                          const NoiseSchedule& schedule, std::size_t pairs, Rng& rng,
                          std::optional<double> fixed_time) {
  if (data.empty()) throw ConfigError("make_pair_batch: empty data set");
  if (pairs == 0) throw ConfigError("make_pair_batch: need at least one pair");
  const Eigen::Index d = data.front().size();

  PairBatch batch;
  if (pairs <= data.size()) {
    // Partial Fisher-Yates over an index permutation.
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < pairs; ++k) {
      const std::size_t j = k + rng.index(data.size() - k);
      std::swap(idx[k], idx[j]);
      batch.source_index.push_back(idx[k]);
    }
  } else {
    for (std::size_t k = 0; k < pairs; ++k) batch.source_index.push_back(rng.index(data.size()));
  }

  const auto n = static_cast<Eigen::Index>(2 * pairs);
  batch.inputs.resize(d, n);
  batch.noise.resize(d, n);
  batch.times.resize(2 * pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vector& x = data[batch.source_index[k]];
    if (x.size() != d) throw ConfigError("make_pair_batch: samples have different dimensions");
    const double t = fixed_time ? *fixed_time : rng.uniform(kMinTrainTime, schedule.horizon);
    const Vector views[2] = {x, invariant_view(transform, x)};
    for (int v = 0; v < 2; ++v) {
      const auto col = static_cast<Eigen::Index>(2 * k + v);
      const Vector eps = rng.normal_vector(d);
      batch.noise.col(col) = eps;
      batch.inputs.col(col) = perturb_with(schedule, views[v], t, eps);
      batch.times[col] = t;
    }
  }
  return batch;
}

double nt_xent_loss(const Matrix& z, double temperature) { return similarities(z, temperature).loss; }

Matrix nt_xent_grad(const Matrix& z, double temperature) {
  return gradient(similarities(z, temperature), temperature);
}

NtXent nt_xent(const Matrix& z, double temperature) {
  Similarities s = similarities(z, temperature);
  Matrix g = gradient(s, temperature);
  return {s.loss, std::move(g)};
}

EncoderTraining train_encoder(const std::vector<Vector>& data, const InvariantTransform& transform,
                              const NoiseSchedule& schedule, const EncoderConfig& encoder_config,
                              const TrainConfig& config, Rng& rng) {
  config.validate();
  if (data.empty()) throw ConfigError("train_encoder: empty data set");
  EncoderTraining out{init_params(encoder_config, rng), {}};
  AdamMoments moments = AdamMoments::zeros_like(out.params);
  const AdamConfig adam = config.adam();
  out.losses.reserve(config.iterations);

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const PairBatch batch = make_pair_batch(data, transform, schedule, config.pairs_per_batch, rng);
    const EncodedBatch enc = encode_batch(out.params, batch.inputs, batch.times);
    NtXent objective;
    try {
      objective = nt_xent(enc.z, config.temperature);
    } catch (const NumericalError& e) {
      throw TrainingError(e.what(), it);
    }
    if (!std::isfinite(objective.loss)) throw TrainingError("NT-Xent loss diverged", it);
    out.losses.push_back(objective.loss);
    const EncoderParams grads = backward_params(out.params, enc.cache, Matrix(), objective.grad);
    adam_step(out.params, grads, moments, adam, it);
  }
  return out;
}

}  // namespace csde
