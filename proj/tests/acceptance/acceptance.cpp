// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "csde/app/commands.hpp"
#include "csde/app/config.hpp"
#include "csde/checkpoint.hpp"
#include "csde/contrastive.hpp"
#include "csde/evaluation.hpp"
#include "csde/gmm.hpp"
#include "csde/guidance.hpp"
#include "csde/io.hpp"
#include "csde/sampler.hpp"
#include "csde/score.hpp"

namespace fs = std::filesystem;
using namespace csde;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
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

double rel_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

Vector flatten(const EncoderParams& p) {
  Vector v(static_cast<Eigen::Index>(p.parameter_count()));
  Eigen::Index k = 0;
  for (const auto& t : p.tensors())
    for (Eigen::Index i = 0; i < t.size; ++i) v[k++] = t.data[i];
  return v;
}

EncoderParams unflatten(const EncoderParams& like, const Vector& v) {
  EncoderParams p = like;
  Eigen::Index k = 0;
  for (auto& t : p.tensors())
    for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] = v[k++];
  return p;
}

EncoderParams random_params(const EncoderConfig& cfg, Rng& rng) {
  EncoderParams p = init_params(cfg, rng);
  for (auto& l : p.trunk) l.bias = 0.3 * rng.normal_vector(l.bias.size());
  for (auto& l : p.head) l.bias = 0.3 * rng.normal_vector(l.bias.size());
  return p;
}

double brute_force_nt_xent(const Matrix& z, double tau) {
  const Eigen::Index n = z.cols();
  auto sim = [&](Eigen::Index i, Eigen::Index j) { return z.col(i).dot(z.col(j)) / (z.col(i).norm() * z.col(j).norm()); };
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = i % 2 == 0 ? i + 1 : i - 1;
    double denom = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) denom += std::exp(sim(i, k) / tau);
    total += -std::log(std::exp(sim(i, j) / tau) / denom);
  }
  return total / static_cast<double>(n);
}

// Shared state for the mixture-task criteria.
struct MixtureRun {
  app::RunConfig config;
  app::TaskBundle data;
  EvalTask task;
  fs::path dir;
};

MixtureRun& mixture_run() {
  static MixtureRun run = [] {
    MixtureRun r;
    r.dir = fs::temp_directory_path() / "csde_acceptance";
    fs::remove_all(r.dir);
    r.config = app::RunConfig::parse(read_file(fs::path(CSDE_CONFIG_DIR) / "gmm_translate.cfg"),
                                     {"out=" + (r.dir / "main").string()});
    std::ostringstream log;
    app::cmd_train_encoder(r.config, log);
    r.data = app::generate_task_data(r.config);
    r.task = app::make_eval_task(r.config, r.data, true);
    return r;
  }();
  return run;
}

Outcome gradients() {
  Rng rng(101);
  EncoderConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_widths = {16, 12};
  cfg.proj_widths = {10, 6};
  cfg.time_embed_dim = 8;
  const int instances = 20;
  double worst_param = 0, worst_input = 0, worst_nt = 0, worst_cos = 0, worst_l2 = 0;
  for (int i = 0; i < instances; ++i) {
    const auto p = random_params(cfg, rng);
    const Vector x = rng.normal_vector(8);
    const double t = rng.uniform(0.0, 1.0);
    const Vector wh = rng.normal_vector(cfg.feature_dim()), wz = rng.normal_vector(cfg.projection_dim());
    const auto enc = encode(p, x, t);
    auto probe = [&](const EncoderParams& q, const Vector& xx) {
      const auto e = encode(q, xx, t);
      return wh.dot(e.h) + wz.dot(e.z);
    };
    worst_param = std::max(worst_param, rel_error(flatten(backward_params(p, enc.cache, wh, wz)),
                                                  central_diff([&](const Vector& v) { return probe(unflatten(p, v), x); },
                                                               flatten(p))));
    worst_input = std::max(
        worst_input, rel_error(backward_input(p, enc.cache, wh),
                               central_diff([&](const Vector& v) { return wh.dot(encode(p, v, t).h); }, x)));

    Matrix z(6, 8);
    for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) = rng.normal_vector(6);
    const Vector flat = Eigen::Map<const Vector>(z.data(), z.size());
    const Vector fd = central_diff(
        [&](const Vector& v) { return nt_xent_loss(Eigen::Map<const Matrix>(v.data(), 6, 8), 0.2); }, flat);
    const Matrix g = nt_xent_grad(z, 0.2);
    worst_nt = std::max(worst_nt, rel_error(Eigen::Map<const Vector>(g.data(), g.size()), fd));

    const Vector y = rng.normal_vector(8), xs = rng.normal_vector(8);
    for (auto sim : {Similarity::kCosine, Similarity::kNegL2}) {
      const GuidanceConfig gc{rng.uniform(1.0, 500.0), sim, 0.5, 10};
      const double e = rel_error(guidance_grad(p, y, xs, t, gc),
                                 central_diff([&](const Vector& v) { return guidance_energy(p, v, xs, t, gc); }, y));
      (sim == Similarity::kCosine ? worst_cos : worst_l2) = std::max(sim == Similarity::kCosine ? worst_cos : worst_l2, e);
    }
  }
  const double worst = std::max({worst_param, worst_input, worst_nt, worst_cos, worst_l2});
  return {worst < 1e-4, std::to_string(instances) + " instances; max rel err params " + fmt(worst_param) + ", input " +
                            fmt(worst_input) + ", NT-Xent " + fmt(worst_nt) + ", gradQ cosine " + fmt(worst_cos) +
                            ", gradQ neg_l2 " + fmt(worst_l2) + " (< 1e-4)"};
}

Outcome sde_kernel() {
  const NoiseSchedule s;
  double worst_identity = 0, worst_quad = 0;
  for (int i = 0; i < 1000; ++i) {
    const double t = i / 999.0;
    const double m = mean_coeff(s, t), sd = marginal_std(s, t);
    worst_identity = std::max(worst_identity, std::abs(m * m + sd * sd - 1.0));
    const int panels = 20000;
    double integral = 0.0;
    if (t > 0) {
      const double h = t / panels;
      integral = 0.5 * (beta(s, 0.0) + beta(s, t));
      for (int k = 1; k < panels; ++k) integral += beta(s, k * h);
      integral *= h;
    }
    const double oracle = std::exp(-0.5 * integral);
    worst_quad = std::max(worst_quad, std::abs(m - oracle) / oracle);
  }

  const int n = 100000;
  const double t = 0.37;
  Vector x0(3);
  x0 << 1.0, -2.0, 0.5;
  const double m = mean_coeff(s, t), sd = marginal_std(s, t);
  Rng rng(102);
  Vector sum = Vector::Zero(3), sumsq = Vector::Zero(3);
  for (int i = 0; i < n; ++i) {
    const Vector y = perturb(s, x0, t, rng);
    sum += y;
    sumsq += y.cwiseProduct(y);
  }
  bool mc_ok = true;
  double worst_mean_z = 0, worst_var = 0;
  for (int j = 0; j < 3; ++j) {
    const double mu = sum[j] / n;
    const double var = sumsq[j] / n - mu * mu;
    worst_mean_z = std::max(worst_mean_z, std::abs(mu - m * x0[j]) / (sd / std::sqrt(double(n))));
    worst_var = std::max(worst_var, std::abs(var - sd * sd) / (sd * sd));
  }
  mc_ok = worst_mean_z < 4.0 && worst_var < 0.05;
  return {worst_identity <= 1e-12 && worst_quad < 1e-8 && mc_ok,
          "max |m^2+s^2-1| " + fmt(worst_identity) + " (<= 1e-12), max quad rel err " + fmt(worst_quad) +
              " (< 1e-8), MC mean " + fmt(worst_mean_z) + " se (< 4), MC var rel " + fmt(worst_var) + " (< 0.05)"};
}

Outcome score_oracle() {
  Rng rng(103);
  const NoiseSchedule s;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    GaussianMixture mix;
    const std::size_t k = 1 + trial % 4;
    double total = 0;
    for (std::size_t c = 0; c < k; ++c) {
      mix.weights.push_back(rng.uniform(0.2, 1.0));
      total += mix.weights.back();
      mix.means.push_back(2.0 * rng.normal_vector(3));
      Vector v(3);
      for (int j = 0; j < 3; ++j) v[j] = rng.uniform(0.1, 2.0);
      mix.variances.push_back(v);
    }
    for (auto& w : mix.weights) w /= total;
    const Vector y = 1.5 * rng.normal_vector(3);
    const double t = rng.uniform(0.0, 1.0);
    const Vector fd = central_diff([&](const Vector& v) { return gmm_log_density_t(mix, s, v, t); }, y, 1e-5);
    worst = std::max(worst, rel_error(gmm_score_t(mix, s, y, t), fd));
  }
  return {worst < 1e-6, "100 random (mixture, y, t); max rel err " + fmt(worst) + " (< 1e-6)"};
}

Outcome unguided_generation() {
  const NoiseSchedule s;
  Vector mu(2);
  mu << 2.0, -1.0;
  const GaussianMixture mix{{0.3, 0.7}, {mu, -mu}, {Vector::Constant(2, 0.2), Vector::Constant(2, 0.2)}};
  const AnalyticGmmScore score(mix, s);
  const std::vector<Vector> starts(5000, Vector::Zero(2));
  const auto results = translate_batch(starts, score, nullptr, GuidanceConfig{0.0, Similarity::kCosine, 1.0, 1000}, s, 104);
  int count0 = 0;
  Vector sum0 = Vector::Zero(2), sum1 = Vector::Zero(2);
  for (const auto& r : results) {
    if ((r.output - mu).squaredNorm() < (r.output + mu).squaredNorm()) {
      ++count0;
      sum0 += r.output;
    } else {
      sum1 += r.output;
    }
  }
  const double w0 = double(count0) / results.size();
  const double e0 = (sum0 / count0 - mu).cwiseAbs().maxCoeff();
  const double e1 = (sum1 / double(results.size() - count0) + mu).cwiseAbs().maxCoeff();
  return {std::abs(w0 - 0.3) <= 0.05 && std::abs((1 - w0) - 0.7) <= 0.05 && e0 < 0.1 && e1 < 0.1,
          "5000 samples, weights " + fmt(w0) + "/" + fmt(1 - w0) + " (true 0.3/0.7, tol 0.05), mean errors " + fmt(e0) +
              ", " + fmt(e1) + " (< 0.1)"};
}

Outcome nt_xent_oracle() {
  Rng rng(105);
  double worst = 0;
  for (int b = 0; b < 50; ++b) {
    const Eigen::Index pairs = 2 + b % 7;
    Matrix z(5, 2 * pairs);
    for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) = rng.normal_vector(5);
    const double a = nt_xent_loss(z, 0.2), o = brute_force_nt_xent(z, 0.2);
    worst = std::max(worst, std::abs(a - o) / std::abs(o));
  }
  Matrix single(4, 2);
  single.col(0) = rng.normal_vector(4);
  single.col(1) = rng.normal_vector(4);
  const double k1 = nt_xent_loss(single, 0.2);
  const Matrix same = rng.normal_vector(4).replicate(1, 4);
  const double l3 = nt_xent_loss(same, 0.2);
  return {worst < 1e-10 && k1 == 0.0 && std::abs(l3 - std::log(3.0)) <= 1e-12,
          "50 batches max rel err " + fmt(worst) + " (< 1e-10); K=1 loss " + fmt(k1) + "; identical K=2 loss - log 3 = " +
              fmt(l3 - std::log(3.0))};
}

Outcome lambda_zero_reduction() {
  auto& run = mixture_run();
  const GuidanceConfig cfg{0.0, Similarity::kCosine, run.config.guidance.initial_time, run.config.guidance.steps};
  const auto with_encoder = translate_batch(run.task.sources, *run.task.score, run.task.encoder.get(), cfg,
                                            run.task.schedule, run.config.seed);
  std::size_t identical = 0;
  for (std::size_t k = 0; k < run.task.sources.size(); ++k) {
    const Vector reference = sample_unguided(run.task.sources[k], *run.task.score, cfg.initial_time, cfg.steps,
                                             run.task.schedule, run.config.seed, k);
    if (with_encoder[k].output == reference) ++identical;
  }
  return {identical == run.task.sources.size(),
          std::to_string(identical) + "/" + std::to_string(run.task.sources.size()) +
              " outputs bit-identical to the unguided sampler (same seed)"};
}

// Mean and standard error of per-sample differences b - a.
std::pair<double, double> paired(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  return {mean(d), standard_error(d)};
}

Outcome guidance_effectiveness() {
  auto& run = mixture_run();
  const auto& g = run.config.guidance;
  const auto base = evaluate(run.task, GuidanceConfig{0.0, g.similarity, g.initial_time, g.steps}, run.config.seed);
  const auto guided = evaluate(run.task, g, run.config.seed);
  const double inv0 = mean(base.invariant_l2), inv1 = mean(guided.invariant_l2);
  const double nll0 = mean(base.nll), nll1 = mean(guided.nll);
  const double inv_change = (inv1 - inv0) / inv0, nll_change = (nll1 - nll0) / std::abs(nll0);
  return {inv_change <= -0.20 && nll_change <= 0.10,
          "n=" + std::to_string(base.invariant_l2.size()) + ", lambda=" + fmt(g.lambda) + " " +
              std::string(to_string(g.similarity)) + ": invariant_L2 " + fmt(inv0) + " -> " + fmt(inv1) + " (" +
              fmt(100 * inv_change, 3) + "%, need <= -20%), target_NLL " + fmt(nll0) + " -> " + fmt(nll1) + " (" +
              fmt(100 * nll_change, 3) + "%, need <= +10%)"};
}

Outcome p_trend() {
  auto& run = mixture_run();
  const auto& g = run.config.guidance;
  std::vector<CellEvaluation> cells;
  for (double p : {0.3, 0.5, 0.7}) cells.push_back(evaluate(run.task, GuidanceConfig{g.lambda, g.similarity, p, g.steps}, run.config.seed));

  // direction = +1: non-decreasing required; at most one inversion, and it must lie within 1 SE.
  auto monotone = [&](const std::function<const std::vector<double>&(const CellEvaluation&)>& col, double direction,
                      std::string& text) {
    int inversions = 0;
    bool ok = true;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto [diff, se] = paired(col(cells[i - 1]), col(cells[i]));
      text += (i > 1 ? ", " : "") + fmt(mean(col(cells[i - 1]))) + "->" + fmt(mean(col(cells[i])));
      if (direction * diff < 0) {
        ++inversions;
        if (std::abs(diff) > se) ok = false;
      }
    }
    return ok && inversions <= 1;
  };
  std::string l2_text, nll_text;
  const bool l2_ok = monotone([](const CellEvaluation& c) -> const std::vector<double>& { return c.l2; }, +1.0, l2_text);
  const bool nll_ok =
      monotone([](const CellEvaluation& c) -> const std::vector<double>& { return c.nll; }, -1.0, nll_text);
  return {l2_ok && nll_ok, "P=0.3,0.5,0.7 at lambda=" + fmt(g.lambda) + ": L2 " + l2_text + " (non-decreasing), target_NLL " +
                               nll_text + " (non-increasing)"};
}

Outcome table3_analog() {
  auto& run = mixture_run();
  std::ostringstream log;
  app::cmd_ablate(run.config, log);
  const auto table = CsvTable::read(run.config.out / "ablation.csv");
  const auto baseline = CsvTable::read(run.config.out / "ablation_baseline.csv");
  if (table.header() != metrics_header() || table.rows().size() != 4)
    return {false, "ablation.csv has " + std::to_string(table.rows().size()) + " rows (need 4 in the metrics schema)"};
  const auto sim = table.column("similarity"), lam = table.column("lambda"), inv = table.column("invariant_L2");
  const double inv0 = parse_double(baseline.rows().front()[inv]);
  int cosine_rows = 0, neg_rows = 0;
  double cos_cal = NAN, neg_cal = NAN;
  for (const auto& row : table.rows()) {
    const double l = parse_double(row[lam]);
    if (row[sim] == "cosine") {
      ++cosine_rows;
      if (l == app::kGmmCosineLambda) cos_cal = parse_double(row[inv]);
    } else if (row[sim] == "neg_l2") {
      ++neg_rows;
      if (l == app::kGmmNegL2Lambda) neg_cal = parse_double(row[inv]);
    }
  }
  const bool ok = cosine_rows == 2 && neg_rows == 2 && cos_cal < inv0 && neg_cal < inv0;
  return {ok, "4 rows (" + std::to_string(cosine_rows) + " cosine, " + std::to_string(neg_rows) +
                  " neg_l2); invariant_L2 lambda=0 " + fmt(inv0) + ", cosine@" + fmt(app::kGmmCosineLambda) + " " +
                  fmt(cos_cal) + ", neg_l2@" + fmt(app::kGmmNegL2Lambda) + " " + fmt(neg_cal)};
}

Outcome determinism() {
  auto& run = mixture_run();
  std::vector<std::string> metrics, reports;
  for (const char* name : {"det_a", "det_b"}) {
    auto cfg = run.config;
    cfg.out = run.dir / name;
    std::ostringstream log;
    for (const char* cmd : {"train-encoder", "translate", "report"}) app::run_command(cmd, cfg, log);
    metrics.push_back(read_file(cfg.out / "metrics.csv"));
    reports.push_back(read_file(cfg.out / "report.csv"));
  }
  const bool ok = metrics[0] == metrics[1] && reports[0] == reports[1] && !metrics[0].empty();
  return {ok, std::string("two train-encoder -> translate -> report runs: metrics.csv ") +
                  (metrics[0] == metrics[1] ? "identical" : "DIFFERENT") + ", report.csv " +
                  (reports[0] == reports[1] ? "identical" : "DIFFERENT") + " (" + std::to_string(metrics[0].size()) +
                  " bytes)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 gradient correctness", gradients},
      {"2 SDE kernel correctness", sde_kernel},
      {"3 score oracle", score_oracle},
      {"4 unguided generation sanity", unguided_generation},
      {"5 NT-Xent oracle equivalence", nt_xent_oracle},
      {"6 lambda=0 reduction", lambda_zero_reduction},
      {"7 guidance effectiveness", guidance_effectiveness},
      {"8 P trade-off trend", p_trend},
      {"9 similarity x lambda ablation", table3_analog},
      {"10 end-to-end determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << " [" << fmt(secs, 3) << " s] " << outcome.detail
              << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  fs::remove_all(fs::temp_directory_path() / "csde_acceptance");
  return failures == 0 ? 0 : 1;
}
