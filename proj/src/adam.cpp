#include "csde/adam.hpp"

#include <cmath>

#include "csde/errors.hpp"

namespace csde {

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, const AdamConfig& config, std::size_t iteration) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size())
    throw ContractError("adam_step: parameter, gradient and moment sizes differ");
  if (iteration < 1) throw ContractError("adam_step: iteration is 1-based");

  const double k = static_cast<double>(iteration);
  const double correction1 = 1.0 - std::pow(config.beta1, k);
  const double correction2 = 1.0 - std::pow(config.beta2, k);
  const double decay = 1.0 - config.learning_rate * config.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient", iteration);
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    params[i] *= decay;
  }
}

AdamMoments AdamMoments::zeros_like(const EncoderParams& params) {
  const EncoderConfig c = params.config();
  return {EncoderParams::zeros(c), EncoderParams::zeros(c)};
}

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamMoments& moments, const AdamConfig& config,
               std::size_t iteration) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = moments.first.tensors();
  auto v = moments.second.tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
    throw ContractError("adam_step: parameter structures differ");
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto n = static_cast<std::size_t>(p[i].size);
    adam_step({p[i].data, n}, {g[i].data, static_cast<std::size_t>(g[i].size)},
              {m[i].data, static_cast<std::size_t>(m[i].size)}, {v[i].data, static_cast<std::size_t>(v[i].size)},
              config, iteration);
  }
}

}  // namespace csde
