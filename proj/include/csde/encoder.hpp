#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "csde/rng.hpp"
#include "csde/sde.hpp"

namespace csde {

using Matrix = Eigen::MatrixXd;

struct EncoderConfig {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_widths{128, 128};
  std::vector<Eigen::Index> proj_widths{64, 32};
  Eigen::Index time_embed_dim = 32;

  /// Throws ConfigError on empty layer lists, widths < 1 or an odd embedding size.
  void validate() const;

  Eigen::Index feature_dim() const { return hidden_widths.back(); }
  Eigen::Index projection_dim() const { return proj_widths.back(); }

  bool operator==(const EncoderConfig&) const = default;
};

struct Dense {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// A named, mutable view over one parameter tensor. `dims` is {rows, cols}
/// for matrices and {n} for vectors; `data` is in Eigen (column-major) order.
template <class T>
struct BasicTensorView {
  std::string name;
  T* data;
  Eigen::Index size;
  std::vector<Eigen::Index> dims;
};

using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

/// Weights of the time-conditioned network F.
///
/// Trunk:  a_0 = W_0 x + b_0 + E tau(t),  h_i = silu(a_i),  a_i = W_i h_{i-1} + b_i
/// Head:   p_j = silu(P_j p_{j-1} + c_j) with p_{-1} = h, the last head layer linear.
/// h (last trunk activation) feeds guidance, z (head output) feeds NT-Xent.
struct EncoderParams {
  std::vector<Dense> trunk;
  Matrix time_proj;  // hidden_widths[0] x time_embed_dim
  std::vector<Dense> head;

  /// All-zero parameters with the shapes implied by `config`.
  static EncoderParams zeros(const EncoderConfig& config);

  /// Configuration recovered from tensor shapes.
  EncoderConfig config() const;

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;

  EncoderParams& operator+=(const EncoderParams& other);
  EncoderParams& operator*=(double scale);

  bool operator==(const EncoderParams& other) const;
};

/// Activations from a batched forward pass; columns index batch items.
struct ForwardCache {
  Matrix input;
  Matrix time_embedding;
  std::vector<Matrix> trunk_pre;
  std::vector<Matrix> trunk_act;
  std::vector<Matrix> head_pre;
  std::vector<Matrix> head_act;  // last entry equals head_pre.back() (linear output)

  Eigen::Index batch() const { return input.cols(); }
};

struct Encoded {
  Vector h;
  Vector z;
  ForwardCache cache;
};

struct EncodedBatch {
  Matrix h;  // feature_dim x B
  Matrix z;  // projection_dim x B
  ForwardCache cache;
};

/// Sinusoidal features (sin, cos) of t * 1000 / 10000^(2i/dim), interleaved.
Vector time_embed(double t, Eigen::Index dim);

double silu(double a);
double silu_grad(double a);

EncoderParams init_params(const EncoderConfig& config, Rng& rng);

Encoded encode(const EncoderParams& params, const Vector& x, double t);

/// Columns of `x` are inputs; `t` holds one time per column.
EncodedBatch encode_batch(const EncoderParams& params, const Matrix& x, std::span<const double> t);

/// Gradient of a scalar loss with respect to all parameters given upstream
/// gradients for h and/or z. Pass an empty (0-column) matrix to omit one.
/// Gradients are summed over batch columns.
EncoderParams backward_params(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_h,
                              const Matrix& grad_z);

EncoderParams backward_params(const EncoderParams& params, const ForwardCache& cache, const Vector& grad_h,
                              const Vector& grad_z);

/// Gradient with respect to the inputs, given an upstream gradient on h only.
Matrix backward_input(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_h);

Vector backward_input(const EncoderParams& params, const ForwardCache& cache, const Vector& grad_h);

}  // namespace csde
