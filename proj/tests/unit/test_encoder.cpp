#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "csde/checkpoint.hpp"
#include "csde/encoder.hpp"
#include "csde/errors.hpp"
#include "support.hpp"

namespace csde {
namespace {

using testing::central_diff;
using testing::random_params;
using testing::rel_error;
using testing::small_encoder_config;

namespace fs = std::filesystem;

// Scalar probe: fixed random linear functionals of h and z.
struct Probe {
  Vector wh, wz;
  double operator()(const EncoderParams& p, const Vector& x, double t) const {
    const auto e = encode(p, x, t);
    return wh.dot(e.h) + wz.dot(e.z);
  }
};

Vector flatten(const EncoderParams& p) {
  Vector v(static_cast<Eigen::Index>(p.parameter_count()));
  Eigen::Index k = 0;
  for (const auto& tensor : p.tensors())
    for (Eigen::Index i = 0; i < tensor.size; ++i) v[k++] = tensor.data[i];
  return v;
}

EncoderParams unflatten(const EncoderParams& like, const Vector& v) {
  EncoderParams p = like;
  Eigen::Index k = 0;
  for (auto& tensor : p.tensors())
    for (Eigen::Index i = 0; i < tensor.size; ++i) tensor.data[i] = v[k++];
  return p;
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("csde_test_" + name); }

TEST(TimeEmbed, ZeroTimeAndRange) {
  const Vector e0 = time_embed(0.0, 32);
  for (Eigen::Index i = 0; i < 16; ++i) {
    EXPECT_EQ(e0[2 * i], 0.0);
    EXPECT_EQ(e0[2 * i + 1], 1.0);
  }
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) EXPECT_LE(time_embed(rng.uniform(0.0, 1.0), 32).cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT((time_embed(0.25, 32) - time_embed(0.75, 32)).norm(), 0.0);
}

TEST(TimeEmbed, FrequencyLayout) {
  const double t = 0.3;
  const Vector e = time_embed(t, 8);
  for (int i = 0; i < 4; ++i) {
    const double arg = t * 1000.0 / std::pow(10000.0, 2.0 * i / 8.0);
    EXPECT_NEAR(e[2 * i], std::sin(arg), 1e-12);
    EXPECT_NEAR(e[2 * i + 1], std::cos(arg), 1e-12);
  }
}

TEST(EncoderConfig, ValidateRejectsBadShapes) {
  auto c = small_encoder_config();
  c.time_embed_dim = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_encoder_config();
  c.hidden_widths = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_encoder_config();
  c.proj_widths = {4, 0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Encode, ZeroParamsGiveZeroOutputs) {
  const auto p = EncoderParams::zeros(small_encoder_config());
  const auto e = encode(p, Vector::Ones(5), 0.4);
  EXPECT_EQ(e.h, Vector::Zero(6));
  EXPECT_EQ(e.z, Vector::Zero(4));
}

TEST(Encode, ShapesDeterminismAndTimeConditioning) {
  Rng rng(2);
  const auto cfg = small_encoder_config();
  const auto p = random_params(cfg, rng);
  const Vector x = rng.normal_vector(5);
  const auto a = encode(p, x, 0.3), b = encode(p, x, 0.3);
  EXPECT_EQ(a.h.size(), cfg.feature_dim());
  EXPECT_EQ(a.z.size(), cfg.projection_dim());
  EXPECT_EQ(a.h, b.h);
  EXPECT_EQ(a.z, b.z);
  for (int k = 0; k < 20; ++k) {
    const double t1 = rng.uniform(0.0, 1.0), t2 = rng.uniform(0.0, 1.0);
    EXPECT_GT((encode(p, x, t1).h - encode(p, x, t2).h).norm(), 0.0);
  }
  EXPECT_THROW(encode(p, Vector::Ones(4), 0.3), ConfigError);
}

TEST(Encode, ContinuousInTime) {
  Rng rng(3);
  const auto p = random_params(small_encoder_config(), rng);
  for (int k = 0; k < 50; ++k) {
    const Vector x = rng.normal_vector(5);
    const double t = rng.uniform(0.0, 0.99);
    const Vector h = encode(p, x, t).h;
    EXPECT_LT((h - encode(p, x, t + 1e-6).h).norm(), 1e-3 * (1.0 + h.norm()));
  }
}

TEST(Encode, BatchMatchesSingle) {
  Rng rng(4);
  const auto p = random_params(small_encoder_config(), rng);
  Matrix x(5, 3);
  std::vector<double> ts{0.1, 0.5, 0.9};
  for (int c = 0; c < 3; ++c) x.col(c) = rng.normal_vector(5);
  const auto batch = encode_batch(p, x, ts);
  for (int c = 0; c < 3; ++c) {
    const auto single = encode(p, x.col(c), ts[c]);
    EXPECT_LT((Vector(batch.h.col(c)) - single.h).norm(), 1e-14);
    EXPECT_LT((Vector(batch.z.col(c)) - single.z).norm(), 1e-14);
  }
}

TEST(Encode, CacheReproducesOutputs) {
  Rng rng(5);
  const auto p = random_params(small_encoder_config(), rng);
  const auto e = encode(p, rng.normal_vector(5), 0.6);
  EXPECT_EQ(Vector(e.cache.trunk_act.back().col(0)), e.h);
  EXPECT_EQ(Vector(e.cache.head_act.back().col(0)), e.z);
  const Matrix replay = e.cache.trunk_pre.front().unaryExpr([](double a) { return silu(a); });
  EXPECT_EQ(replay, e.cache.trunk_act.front());
}

TEST(BackwardParams, MatchesFiniteDifferences) {
  Rng rng(6);
  const auto cfg = small_encoder_config();
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(cfg, rng);
    const Vector x = rng.normal_vector(5);
    const double t = rng.uniform(0.0, 1.0);
    const Probe probe{rng.normal_vector(cfg.feature_dim()), rng.normal_vector(cfg.projection_dim())};
    const auto e = encode(p, x, t);
    const Vector analytic = flatten(backward_params(p, e.cache, probe.wh, probe.wz));
    const Vector fd = central_diff([&](const Vector& v) { return probe(unflatten(p, v), x, t); }, flatten(p));
    EXPECT_LT(rel_error(analytic, fd), 1e-4) << "trial " << trial;
  }
}

TEST(BackwardParams, EachTensorMatchesFiniteDifferences) {
  Rng rng(7);
  const auto cfg = small_encoder_config();
  const auto p = random_params(cfg, rng);
  const Vector x = rng.normal_vector(5);
  const Probe probe{rng.normal_vector(cfg.feature_dim()), rng.normal_vector(cfg.projection_dim())};
  const auto grads = backward_params(p, encode(p, x, 0.45).cache, probe.wh, probe.wz);
  const Vector fd = central_diff([&](const Vector& v) { return probe(unflatten(p, v), x, 0.45); }, flatten(p));
  const auto fd_params = unflatten(p, fd);
  const auto g_tensors = grads.tensors();
  const auto f_tensors = fd_params.tensors();
  for (std::size_t k = 0; k < g_tensors.size(); ++k) {
    const Vector g = Eigen::Map<const Vector>(g_tensors[k].data, g_tensors[k].size);
    const Vector f = Eigen::Map<const Vector>(f_tensors[k].data, f_tensors[k].size);
    EXPECT_LT(rel_error(g, f), 1e-4) << g_tensors[k].name;
  }
}

TEST(BackwardParams, ZeroUpstreamAndLinearity) {
  Rng rng(8);
  const auto cfg = small_encoder_config();
  const auto p = random_params(cfg, rng);
  const auto e = encode(p, rng.normal_vector(5), 0.2);
  EXPECT_EQ(backward_params(p, e.cache, Vector(Vector::Zero(6)), Vector(Vector::Zero(4))), EncoderParams::zeros(cfg));

  const Vector h1 = rng.normal_vector(6), h2 = rng.normal_vector(6);
  const Vector z1 = rng.normal_vector(4), z2 = rng.normal_vector(4);
  auto sum = backward_params(p, e.cache, h1, z1);
  sum += backward_params(p, e.cache, h2, z2);
  const Vector joint = flatten(backward_params(p, e.cache, Vector(h1 + h2), Vector(z1 + z2)));
  EXPECT_LT(rel_error(flatten(sum), joint), 1e-12);

  // omitted branch behaves like a zero gradient
  EXPECT_EQ(backward_params(p, e.cache, h1, Vector()), backward_params(p, e.cache, h1, Vector::Zero(4)));
}

TEST(BackwardParams, MismatchedCacheIsContractError) {
  Rng rng(9);
  const auto p = random_params(small_encoder_config(), rng);
  const auto other = random_params(small_encoder_config(6), rng);
  const auto e = encode(other, rng.normal_vector(6), 0.2);
  EXPECT_THROW(backward_params(p, e.cache, Vector(Vector::Zero(6)), Vector(Vector::Zero(4))), ContractError);
  EXPECT_THROW(backward_input(p, e.cache, Vector(Vector::Zero(6))), ContractError);
}

TEST(BackwardInput, MatchesFiniteDifferences) {
  Rng rng(10);
  const auto cfg = small_encoder_config();
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(cfg, rng);
    const Vector x = rng.normal_vector(5);
    const double t = rng.uniform(0.0, 1.0);
    const Vector wh = rng.normal_vector(cfg.feature_dim());
    const auto e = encode(p, x, t);
    const Vector analytic = backward_input(p, e.cache, wh);
    const Vector fd = central_diff([&](const Vector& v) { return wh.dot(encode(p, v, t).h); }, x);
    EXPECT_LT(rel_error(analytic, fd), 1e-4) << "trial " << trial;
  }
}

TEST(BackwardInput, ZeroUpstreamAndCacheReuse) {
  Rng rng(11);
  const auto p = random_params(small_encoder_config(), rng);
  const auto e = encode(p, rng.normal_vector(5), 0.7);
  EXPECT_EQ(backward_input(p, e.cache, Vector(Vector::Zero(6))), Vector::Zero(5));
  const Vector g = rng.normal_vector(6);
  EXPECT_EQ(backward_input(p, e.cache, g), backward_input(p, e.cache, g));
}

TEST(InitParams, XavierBoundsAndDeterminism) {
  const auto cfg = small_encoder_config();
  Rng a(12), b(12);
  const auto p = init_params(cfg, a);
  EXPECT_EQ(p, init_params(cfg, b));
  for (const auto& layer : p.trunk) {
    const double bound = std::sqrt(6.0 / double(layer.weight.rows() + layer.weight.cols()));
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_EQ(layer.bias, Vector::Zero(layer.bias.size()));
  }
  EXPECT_EQ(p.config(), cfg);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(13);
  const auto p = random_params(small_encoder_config(), rng);
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(p, path);
  EXPECT_EQ(load_checkpoint(path), p);
  EXPECT_EQ(load_checkpoint(path, small_encoder_config()), p);
  fs::remove(path);
}

TEST(Checkpoint, LoadErrorsAreDistinct) {
  Rng rng(14);
  const auto p = random_params(small_encoder_config(), rng);
  const auto path = temp_path("errors.ckpt");
  save_checkpoint(p, path);
  const auto size = fs::file_size(path);

  auto kind_of = [](const fs::path& f, const std::optional<EncoderConfig>& expected = std::nullopt) {
    try {
      load_checkpoint(f, expected);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return CheckpointError::Kind::kIo;
  };

  EXPECT_EQ(kind_of(path, small_encoder_config(9)), CheckpointError::Kind::kShape);
  EXPECT_EQ(kind_of(temp_path("does_not_exist.ckpt")), CheckpointError::Kind::kIo);

  fs::resize_file(path, size - 5);
  EXPECT_EQ(kind_of(path), CheckpointError::Kind::kCorrupt);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write("CSDE", 4);
    const std::uint32_t version = 99;
    out.write(reinterpret_cast<const char*>(&version), 4);
  }
  EXPECT_EQ(kind_of(path), CheckpointError::Kind::kVersion);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "not a checkpoint";
  }
  EXPECT_EQ(kind_of(path), CheckpointError::Kind::kCorrupt);
  fs::remove(path);
}

}  // namespace
}  // namespace csde
