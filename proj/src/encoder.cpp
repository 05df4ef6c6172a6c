#include "csde/encoder.hpp"

#include <cmath>
#include <string>

#include "csde/errors.hpp"

namespace csde {
namespace {

Matrix silu(const Matrix& a) { return a.unaryExpr([](double v) { return csde::silu(v); }); }

Matrix silu_grad(const Matrix& a) { return a.unaryExpr([](double v) { return csde::silu_grad(v); }); }

Dense zero_dense(Eigen::Index out, Eigen::Index in) { return {Matrix::Zero(out, in), Vector::Zero(out)}; }

void xavier(Matrix& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
}

template <class View, class Params>
std::vector<View> collect_views(Params& p) {
  std::vector<View> out;
  auto add_dense = [&out](const std::string& prefix, auto& layer) {
    out.push_back({prefix + ".weight", layer.weight.data(), layer.weight.size(),
                   {layer.weight.rows(), layer.weight.cols()}});
    out.push_back({prefix + ".bias", layer.bias.data(), layer.bias.size(), {layer.bias.size()}});
  };
  for (std::size_t i = 0; i < p.trunk.size(); ++i) add_dense("trunk." + std::to_string(i), p.trunk[i]);
  out.push_back({"time.weight", p.time_proj.data(), p.time_proj.size(), {p.time_proj.rows(), p.time_proj.cols()}});
  for (std::size_t i = 0; i < p.head.size(); ++i) add_dense("head." + std::to_string(i), p.head[i]);
  return out;
}

void check_cache(const EncoderParams& params, const ForwardCache& cache) {
  if (cache.trunk_pre.size() != params.trunk.size() || cache.head_pre.size() != params.head.size() ||
      cache.input.rows() != params.trunk.front().weight.cols() ||
      cache.time_embedding.rows() != params.time_proj.cols())
    throw ContractError("forward cache does not match encoder parameters");
  for (std::size_t i = 0; i < params.trunk.size(); ++i)
    if (cache.trunk_pre[i].rows() != params.trunk[i].weight.rows())
      throw ContractError("forward cache does not match encoder parameters");
  for (std::size_t i = 0; i < params.head.size(); ++i)
    if (cache.head_pre[i].rows() != params.head[i].weight.rows())
      throw ContractError("forward cache does not match encoder parameters");
}

// Backpropagate `grad_h` (gradient on the last trunk activation) through the
// trunk. Accumulates parameter gradients into `grads` when non-null and
// returns the gradient with respect to the input.
Matrix trunk_backward(const EncoderParams& params, const ForwardCache& cache, Matrix grad_act,
                      EncoderParams* grads) {
  for (std::size_t k = params.trunk.size(); k-- > 0;) {
    const Matrix grad_pre = grad_act.cwiseProduct(silu_grad(cache.trunk_pre[k]));
    const Matrix& prev = k == 0 ? cache.input : cache.trunk_act[k - 1];
    if (grads) {
      grads->trunk[k].weight.noalias() += grad_pre * prev.transpose();
      grads->trunk[k].bias += grad_pre.rowwise().sum();
      if (k == 0) grads->time_proj.noalias() += grad_pre * cache.time_embedding.transpose();
    }
    grad_act = params.trunk[k].weight.transpose() * grad_pre;
  }
  return grad_act;
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_dim < 1) throw ConfigError("encoder input_dim must be >= 1");
  if (hidden_widths.empty() || proj_widths.empty()) throw ConfigError("encoder needs at least one trunk and head layer");
  for (auto w : hidden_widths)
    if (w < 1) throw ConfigError("encoder hidden widths must be >= 1");
  for (auto w : proj_widths)
    if (w < 1) throw ConfigError("encoder projection widths must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) throw ConfigError("time_embed_dim must be even and >= 2");
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  config.validate();
  EncoderParams p;
  Eigen::Index in = config.input_dim;
  for (auto w : config.hidden_widths) {
    p.trunk.push_back(zero_dense(w, in));
    in = w;
  }
  p.time_proj = Matrix::Zero(config.hidden_widths.front(), config.time_embed_dim);
  for (auto w : config.proj_widths) {
    p.head.push_back(zero_dense(w, in));
    in = w;
  }
  return p;
}

EncoderConfig EncoderParams::config() const {
  EncoderConfig c;
  c.input_dim = trunk.empty() ? 0 : trunk.front().weight.cols();
  c.hidden_widths.clear();
  c.proj_widths.clear();
  for (const auto& l : trunk) c.hidden_widths.push_back(l.weight.rows());
  for (const auto& l : head) c.proj_widths.push_back(l.weight.rows());
  c.time_embed_dim = time_proj.cols();
  return c;
}

std::vector<TensorView> EncoderParams::tensors() { return collect_views<TensorView>(*this); }

std::vector<ConstTensorView> EncoderParams::tensors() const { return collect_views<ConstTensorView>(*this); }

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : tensors()) n += static_cast<std::size_t>(v.size);
  return n;
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  if (mine.size() != theirs.size()) throw ContractError("parameter structures differ");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].dims != theirs[i].dims) throw ContractError("parameter shapes differ: " + mine[i].name);
    for (Eigen::Index j = 0; j < mine[i].size; ++j) mine[i].data[j] += theirs[i].data[j];
  }
  return *this;
}

EncoderParams& EncoderParams::operator*=(double scale) {
  for (auto& v : tensors())
    for (Eigen::Index j = 0; j < v.size; ++j) v.data[j] *= scale;
  return *this;
}

bool EncoderParams::operator==(const EncoderParams& other) const {
  auto a = tensors();
  auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].dims != b[i].dims) return false;
    for (Eigen::Index j = 0; j < a[i].size; ++j)
      if (a[i].data[j] != b[i].data[j]) return false;
  }
  return true;
}

Vector time_embed(double t, Eigen::Index dim) {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("time embedding dimension must be even");
  Vector e(dim);
  const double scaled = t * 1000.0;
  for (Eigen::Index i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    e[2 * i] = std::sin(scaled * freq);
    e[2 * i + 1] = std::cos(scaled * freq);
  }
  return e;
}

double silu(double a) { return a / (1.0 + std::exp(-a)); }

double silu_grad(double a) {
  const double s = 1.0 / (1.0 + std::exp(-a));
  return s * (1.0 + a * (1.0 - s));
}

EncoderParams init_params(const EncoderConfig& config, Rng& rng) {
  EncoderParams p = EncoderParams::zeros(config);
  for (auto& l : p.trunk) xavier(l.weight, rng);
  xavier(p.time_proj, rng);
  for (auto& l : p.head) xavier(l.weight, rng);
  return p;
}

EncodedBatch encode_batch(const EncoderParams& params, const Matrix& x, std::span<const double> t) {
  if (x.rows() != params.trunk.front().weight.cols())
    throw ConfigError("encoder input has " + std::to_string(x.rows()) + " entries, expected " +
                      std::to_string(params.trunk.front().weight.cols()));
  if (static_cast<Eigen::Index>(t.size()) != x.cols()) throw ConfigError("one time value per batch column required");

  ForwardCache c;
  c.input = x;
  c.time_embedding.resize(params.time_proj.cols(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) c.time_embedding.col(j) = time_embed(t[j], params.time_proj.cols());

  const Matrix* prev = &c.input;
  for (std::size_t k = 0; k < params.trunk.size(); ++k) {
    Matrix pre = params.trunk[k].weight * *prev;
    pre.colwise() += params.trunk[k].bias;
    if (k == 0) pre.noalias() += params.time_proj * c.time_embedding;
    c.trunk_act.push_back(silu(pre));
    c.trunk_pre.push_back(std::move(pre));
    prev = &c.trunk_act.back();
  }
  for (std::size_t k = 0; k < params.head.size(); ++k) {
    Matrix pre = params.head[k].weight * *prev;
    pre.colwise() += params.head[k].bias;
    const bool last = k + 1 == params.head.size();
    c.head_act.push_back(last ? pre : silu(pre));
    c.head_pre.push_back(std::move(pre));
    prev = &c.head_act.back();
  }
  EncodedBatch out;
  out.h = c.trunk_act.back();
  out.z = c.head_act.back();
  out.cache = std::move(c);
  return out;
}

Encoded encode(const EncoderParams& params, const Vector& x, double t) {
  const double ts[1] = {t};
  EncodedBatch b = encode_batch(params, x, ts);
  return {b.h.col(0), b.z.col(0), std::move(b.cache)};
}

EncoderParams backward_params(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_h,
                              const Matrix& grad_z) {
  check_cache(params, cache);
  const Eigen::Index batch = cache.batch();
  if ((grad_h.cols() != 0 && (grad_h.cols() != batch || grad_h.rows() != cache.trunk_act.back().rows())) ||
      (grad_z.cols() != 0 && (grad_z.cols() != batch || grad_z.rows() != cache.head_act.back().rows())))
    throw ContractError("upstream gradient shape does not match forward cache");

  EncoderParams grads = EncoderParams::zeros(params.config());
  Matrix grad_feature = grad_h.cols() != 0 ? grad_h : Matrix::Zero(cache.trunk_act.back().rows(), batch);

  if (grad_z.cols() != 0) {
    Matrix grad_act = grad_z;
    for (std::size_t k = params.head.size(); k-- > 0;) {
      const bool last = k + 1 == params.head.size();
      const Matrix grad_pre = last ? grad_act : Matrix(grad_act.cwiseProduct(silu_grad(cache.head_pre[k])));
      const Matrix& prev = k == 0 ? cache.trunk_act.back() : cache.head_act[k - 1];
      grads.head[k].weight.noalias() += grad_pre * prev.transpose();
      grads.head[k].bias += grad_pre.rowwise().sum();
      grad_act = params.head[k].weight.transpose() * grad_pre;
    }
    grad_feature += grad_act;
  }
  trunk_backward(params, cache, std::move(grad_feature), &grads);
  return grads;
}

EncoderParams backward_params(const EncoderParams& params, const ForwardCache& cache, const Vector& grad_h,
                              const Vector& grad_z) {
  auto as_matrix = [](const Vector& v) { return v.size() == 0 ? Matrix() : Matrix(v); };
  return backward_params(params, cache, as_matrix(grad_h), as_matrix(grad_z));
}

Matrix backward_input(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_h) {
  check_cache(params, cache);
  if (grad_h.cols() != cache.batch() || grad_h.rows() != cache.trunk_act.back().rows())
    throw ContractError("upstream gradient shape does not match forward cache");
  return trunk_backward(params, cache, grad_h, nullptr);
}

Vector backward_input(const EncoderParams& params, const ForwardCache& cache, const Vector& grad_h) {
  return backward_input(params, cache, Matrix(grad_h)).col(0);
}

}  // namespace csde
