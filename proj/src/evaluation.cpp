#include "csde/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csde/errors.hpp"
#include "csde/metrics.hpp"

namespace csde {

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

CellEvaluation evaluate(const EvalTask& task, const GuidanceConfig& config, std::uint64_t seed, unsigned threads) {
  if (task.sources.empty()) throw ConfigError("evaluate: task has no source samples");
  if (!task.score) throw ConfigError("evaluate: task has no score function");

  CellEvaluation cell;
  cell.results =
      translate_batch(task.sources, *task.score, task.encoder.get(), config, task.schedule, seed, threads);

  std::vector<Vector> outputs;
  outputs.reserve(cell.results.size());
  for (const auto& r : cell.results) outputs.push_back(r.output);

  std::vector<double> psnrs, ssims;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const Vector& x0 = task.sources[k];
    const Vector& y0 = outputs[k];
    cell.l2.push_back(l2_metric(x0, y0));
    if (!task.invariant_mask.empty()) cell.invariant_l2.push_back(invariant_l2(x0, y0, task.invariant_mask));
    if (task.target_mixture)
      cell.nll.push_back(-gmm_log_density_t(*task.target_mixture, task.schedule, y0, 0.0));
    if (task.image) {
      const Vector clamped = y0.cwiseMax(0.0).cwiseMin(1.0);
      psnrs.push_back(psnr(x0, clamped));
      ssims.push_back(ssim(x0, clamped));
    }
  }

  MetricsRow& row = cell.row;
  row.task = task.id;
  row.lambda = config.lambda;
  row.initial_time = config.initial_time;
  row.similarity = config.similarity;
  row.seed = seed;
  row.n = outputs.size();
  row.l2 = mean(cell.l2);
  if (task.image) {
    row.psnr = mean(psnrs);
    row.ssim = mean(ssims);
  }
  if (!cell.invariant_l2.empty()) row.invariant_l2 = mean(cell.invariant_l2);
  if (!cell.nll.empty()) row.target_nll = mean(cell.nll);
  // The unbiased estimate can dip below zero when the sets match; the row reports max(estimate, 0).
  row.mmd = task.target_reference.size() >= 2 && outputs.size() >= 2
                ? std::max(csde::mmd(outputs, task.target_reference), 0.0)
                : std::numeric_limits<double>::quiet_NaN();
  return cell;
}

std::size_t AblationGrid::cell_count() const {
  std::size_t n = 0;
  for (const auto& [sim, ls] : lambdas) n += ls.size();
  return n * initial_times.size();
}

std::vector<CellEvaluation> ablation_sweep(const EvalTask& task, const AblationGrid& grid, std::uint64_t seed,
                                           unsigned threads) {
  if (grid.cell_count() == 0) throw ConfigError("ablation grid is empty");
  std::vector<CellEvaluation> cells;
  cells.reserve(grid.cell_count());
  for (const auto& [sim, lambdas] : grid.lambdas) {
    for (double lambda : lambdas) {
      for (double p : grid.initial_times) {
        GuidanceConfig config{lambda, sim, p, grid.steps};
        try {
          cells.push_back(evaluate(task, config, seed, threads));
        } catch (const std::exception& e) {
          throw Error("ablation cell (similarity=" + std::string(to_string(sim)) + ", lambda=" +
                      format_double(lambda) + ", P=" + format_double(p) + "): " + e.what());
        }
      }
    }
  }
  return cells;
}

const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> header{"task", "lambda", "P", "similarity", "seed", "n",
                                               "L2", "PSNR", "SSIM", "invariant_L2", "target_NLL", "MMD"};
  return header;
}

CsvTable metrics_table(const std::vector<MetricsRow>& rows) {
  CsvTable table(metrics_header());
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    table.add_row({r.task, format_double(r.lambda), format_double(r.initial_time), std::string(to_string(r.similarity)),
                   std::to_string(r.seed), std::to_string(r.n), format_double(r.l2), opt(r.psnr), opt(r.ssim),
                   opt(r.invariant_l2), opt(r.target_nll), format_double(r.mmd)});
  }
  return table;
}

std::vector<MetricsRow> rows_of(const std::vector<CellEvaluation>& cells) {
  std::vector<MetricsRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) rows.push_back(c.row);
  return rows;
}

}  // namespace csde
