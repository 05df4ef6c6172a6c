#include "csde/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csde/errors.hpp"

namespace csde {
namespace {

void check_shapes(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ConfigError("similarity arguments have different shapes");
}

void check_norms(const Vector& h_t, const Vector& h_0) {
  if (!(h_t.norm() > 0.0)) throw NumericalError("cosine similarity undefined: sample-branch feature h_t is zero");
  if (!(h_0.norm() > 0.0)) throw NumericalError("cosine similarity undefined: source-branch feature h_0 is zero");
}

struct BranchFeatures {
  Encoded sample;  // F(y, t), keeps its cache for the backward pass
  Vector source;   // F(x, t)
};

BranchFeatures features(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t) {
  if (y.size() != x_perturbed.size()) throw ConfigError("guidance: sample and source have different dimensions");
  return {encode(encoder, y, t), encode(encoder, x_perturbed, t).h};
}

}  // namespace

std::string_view to_string(Similarity s) { return s == Similarity::kCosine ? "cosine" : "neg_l2"; }

Similarity parse_similarity(std::string_view text) {
  if (text == "cosine") return Similarity::kCosine;
  if (text == "neg_l2") return Similarity::kNegL2;
  throw ConfigError("unknown similarity '" + std::string(text) + "' (expected cosine or neg_l2)");
}

void GuidanceConfig::validate(double horizon) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("guidance lambda must be finite and >= 0");
  if (!(initial_time > 0.0 && initial_time <= horizon)) throw ConfigError("guidance initial time P must be in (0, T]");
  if (steps < 1) throw ConfigError("guidance step count R must be >= 1");
}

double sim_cosine(const Vector& h_t, const Vector& h_0) {
  check_shapes(h_t, h_0);
  check_norms(h_t, h_0);
  return std::clamp(h_t.dot(h_0) / (h_t.norm() * h_0.norm()), -1.0, 1.0);
}

double sim_neg_l2(const Vector& h_t, const Vector& h_0) {
  check_shapes(h_t, h_0);
  return -(h_0 - h_t).squaredNorm();
}

double similarity(Similarity kind, const Vector& h_t, const Vector& h_0) {
  return kind == Similarity::kCosine ? sim_cosine(h_t, h_0) : sim_neg_l2(h_t, h_0);
}

Vector similarity_feature_grad(Similarity kind, const Vector& h_t, const Vector& h_0) {
  check_shapes(h_t, h_0);
  if (kind == Similarity::kNegL2) return 2.0 * (h_0 - h_t);
  check_norms(h_t, h_0);
  const double nt = h_t.norm();
  const double n0 = h_0.norm();
  const double cos = h_t.dot(h_0) / (nt * n0);
  return h_0 / (nt * n0) - (cos / (nt * nt)) * h_t;
}

double guidance_energy(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                       const GuidanceConfig& config) {
  if (config.lambda == 0.0) return 0.0;
  const BranchFeatures f = features(encoder, y, x_perturbed, t);
  return -config.lambda * similarity(config.similarity, f.sample.h, f.source);
}

Vector similarity_input_grad(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                             Similarity kind) {
  const BranchFeatures f = features(encoder, y, x_perturbed, t);
  return backward_input(encoder, f.sample.cache, similarity_feature_grad(kind, f.sample.h, f.source));
}

Vector guidance_grad(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                     const GuidanceConfig& config) {
  if (config.lambda == 0.0) return Vector::Zero(y.size());
  return -config.lambda * similarity_input_grad(encoder, y, x_perturbed, t, config.similarity);
}

GuidanceTerms guidance_terms(const EncoderParams& encoder, const Vector& y, const Vector& x_perturbed, double t,
                             const GuidanceConfig& config) {
  const BranchFeatures f = features(encoder, y, x_perturbed, t);
  GuidanceTerms out;
  out.similarity = similarity(config.similarity, f.sample.h, f.source);
  if (config.lambda == 0.0) {
    out.grad = Vector::Zero(y.size());
  } else {
    const Vector grad_s =
        backward_input(encoder, f.sample.cache, similarity_feature_grad(config.similarity, f.sample.h, f.source));
    out.grad = -config.lambda * grad_s;
  }
  return out;
}

}  // namespace csde
