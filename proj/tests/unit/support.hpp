#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "csde/encoder.hpp"
#include "csde/rng.hpp"

namespace csde::testing {

// Central differences of a scalar function.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = xp[i];
    xp[i] = v + h;
    const double fp = f(xp);
    xp[i] = v - h;
    const double fm = f(xp);
    xp[i] = v;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), with a tiny floor so that two zero vectors agree.
inline double rel_error(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

inline double rel_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

inline EncoderConfig small_encoder_config(Eigen::Index input_dim = 5) {
  EncoderConfig c;
  c.input_dim = input_dim;
  c.hidden_widths = {7, 6};
  c.proj_widths = {5, 4};
  c.time_embed_dim = 8;
  return c;
}

// Xavier weights plus non-zero biases, so every tensor takes part in the checks.
inline EncoderParams random_params(const EncoderConfig& config, Rng& rng) {
  EncoderParams p = init_params(config, rng);
  for (auto& layer : p.trunk) layer.bias = 0.3 * rng.normal_vector(layer.bias.size());
  for (auto& layer : p.head) layer.bias = 0.3 * rng.normal_vector(layer.bias.size());
  return p;
}

}  // namespace csde::testing
