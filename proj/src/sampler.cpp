#include "csde/sampler.hpp"

#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include "csde/errors.hpp"
#include "csde/rng.hpp"

namespace csde {
namespace {

// t_i = i P / R, exact at i = R so that t never exceeds P.
double step_time(double initial_time, std::size_t steps, std::size_t i) {
  if (i == steps) return initial_time;
  return initial_time * static_cast<double>(i) / static_cast<double>(steps);
}

Vector start_point(const Vector& x0, const NoiseSchedule& schedule, double initial_time, std::uint64_t seed,
                   std::uint64_t item) {
  Rng rng = child_rng(seed, item, 0, StreamPurpose::kStart);
  return perturb(schedule, x0, initial_time, rng);
}

Vector step_noise(Eigen::Index d, std::size_t i, std::uint64_t seed, std::uint64_t item) {
  if (i == 1) return Vector::Zero(d);
  Rng rng = child_rng(seed, item, i, StreamPurpose::kStepNoise);
  return rng.normal_vector(d);
}

}  // namespace

TranslationResult translate(const Vector& x0, const ScoreFunction& score, const EncoderParams* encoder,
                            const GuidanceConfig& config, const NoiseSchedule& schedule, std::uint64_t seed,
                            std::uint64_t item) {
  config.validate(schedule.horizon);
  if (!x0.allFinite()) throw NumericalError("translate: source sample is not finite");
  if (x0.size() != score.dim()) throw ConfigError("translate: source dimension does not match the score function");
  if (config.lambda != 0.0 && encoder == nullptr) throw ConfigError("translate: guidance requires an encoder");

  TranslationResult result;
  result.seed = seed;
  result.item = item;
  result.config = config;
  result.steps.reserve(config.steps);

  const double l = config.step_size();
  Vector y = start_point(x0, schedule, config.initial_time, seed, item);
  result.start = y;

  for (std::size_t i = config.steps; i >= 1; --i) {
    const double t = step_time(config.initial_time, config.steps, i);
    StepRecord record{t, std::numeric_limits<double>::quiet_NaN(), 0.0};
    Vector grad_q = Vector::Zero(y.size());
    if (encoder != nullptr) {
      Rng source_rng = child_rng(seed, item, i, StreamPurpose::kSourcePerturb);
      const Vector x = perturb(schedule, x0, t, source_rng);
      GuidanceTerms terms = guidance_terms(*encoder, y, x, t, config);
      record.similarity = terms.similarity;
      record.guidance_norm = terms.grad.norm();
      grad_q = std::move(terms.grad);
    }
    const Vector s = score.score(y, t);
    const Vector z = step_noise(y.size(), i, seed, item);
    y = euler_step(schedule, y, t, l, s, grad_q, z, i);
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "translate: state became non-finite at step " << i << " (t = " << t << ", |score| = " << s.norm()
         << ", |grad Q| = " << record.guidance_norm << ")";
      throw NumericalError(os.str(), i);
    }
    result.steps.push_back(record);
  }
  result.output = std::move(y);
  return result;
}

Vector sample_unguided(const Vector& x0, const ScoreFunction& score, double initial_time, std::size_t steps,
                       const NoiseSchedule& schedule, std::uint64_t seed, std::uint64_t item) {
  if (!(initial_time > 0.0 && initial_time <= schedule.horizon) || steps < 1)
    throw ConfigError("sample_unguided: need P in (0, T] and R >= 1");
  const double l = initial_time / static_cast<double>(steps);
  Vector y = start_point(x0, schedule, initial_time, seed, item);
  for (std::size_t i = steps; i >= 1; --i) {
    const double t = step_time(initial_time, steps, i);
    y = unguided_step(schedule, y, t, l, score.score(y, t), step_noise(y.size(), i, seed, item), i);
  }
  return y;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("CSDE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::vector<TranslationResult> translate_batch(const std::vector<Vector>& x0s, const ScoreFunction& score,
                                               const EncoderParams* encoder, const GuidanceConfig& config,
                                               const NoiseSchedule& schedule, std::uint64_t seed,
                                               unsigned threads) {
  if (x0s.empty()) throw ConfigError("translate_batch: empty source set");
  if (threads == 0) threads = default_thread_count();
  threads = std::min<unsigned>(threads, static_cast<unsigned>(x0s.size()));

  std::vector<TranslationResult> results(x0s.size());
  std::vector<std::exception_ptr> errors(x0s.size());
  auto run = [&](std::size_t worker) {
    for (std::size_t k = worker; k < x0s.size(); k += threads) {
      try {
        results[k] = translate(x0s[k], score, encoder, config, schedule, seed, k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NumericalError& e) {
      throw NumericalError("item " + std::to_string(k) + ": " + e.what(), e.step());
    } catch (const std::exception& e) {
      throw Error("item " + std::to_string(k) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace csde
