#include "csde/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>

#include "csde/app/svg.hpp"
#include "csde/checkpoint.hpp"
#include "csde/contrastive.hpp"
#include "csde/rng.hpp"

namespace csde::app {
namespace fs = std::filesystem;
namespace {

enum DataStream : std::uint64_t {
  kTrainSource = 0,
  kTrainTarget = 1,
  kEvalSource = 2,
  kReferenceTarget = 3,
  kEncoderTraining = 4,
  kScoreTraining = 5,
};

std::uint64_t stream_seed(const RunConfig& config, DataStream stream) {
  return derive_seed(config.seed, stream, 0, StreamPurpose::kData);
}

std::vector<Vector> draw(const RunConfig& config, Domain domain, std::size_t n, DataStream stream) {
  const auto seed = stream_seed(config, stream);
  if (config.task == TaskKind::kGmmTranslate)
    return generate_gmm_data(SyntheticTask::make(config.mixture), domain, n, seed).samples;
  return generate_image_data(config.image, domain, n, seed).samples;
}

void write_text(const fs::path& path, const std::string& text, std::ostream& log) {
  write_file_atomic(path, text);
  log << "wrote " << path.string() << '\n';
}

void write_csv(const fs::path& path, const CsvTable& table, std::ostream& log) { write_text(path, table.str(), log); }

CsvTable loss_table(const std::vector<double>& losses) {
  CsvTable table({"iteration", "loss"});
  for (std::size_t i = 0; i < losses.size(); ++i) table.add_row({std::to_string(i + 1), format_double(losses[i])});
  return table;
}

std::vector<double> numeric_column(const CsvTable& table, std::string_view name) {
  const auto c = table.column(name);
  std::vector<double> out;
  for (const auto& row : table.rows())
    out.push_back(row[c].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(row[c]));
  return out;
}

std::string loss_chart(const std::string& title, const CsvTable& table) {
  return line_chart(title, "iteration", "loss",
                    {{"loss", numeric_column(table, "iteration"), numeric_column(table, "loss")}});
}

std::string p_sweep_chart(const CsvTable& table) {
  std::vector<Series> series{{"L2(x0, y0)", numeric_column(table, "P"), numeric_column(table, "L2")}};
  const auto inv = numeric_column(table, "invariant_L2");
  if (std::any_of(inv.begin(), inv.end(), [](double v) { return std::isfinite(v); }))
    series.push_back({"invariant L2", numeric_column(table, "P"), inv});
  return line_chart("Faithfulness vs initial time P", "P", "mean distance to source", series);
}

void ensure_out_dir(const RunConfig& config) { fs::create_directories(config.out); }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const MissingCheckpointError*>(&e)) return kExitMissingCheckpoint;
  if (const auto* ce = dynamic_cast<const CheckpointError*>(&e))
    return ce->kind() == CheckpointError::Kind::kIo ? kExitFailure : kExitIncompatible;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const TrainingError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

TaskBundle generate_task_data(const RunConfig& config) {
  TaskBundle data;
  data.train_source = draw(config, Domain::kSource, config.n_train, kTrainSource);
  data.train_target = draw(config, Domain::kTarget, config.n_train, kTrainTarget);
  data.eval_source = draw(config, Domain::kSource, config.n_eval, kEvalSource);
  data.reference_target = draw(config, Domain::kTarget, config.n_reference, kReferenceTarget);
  if (config.task == TaskKind::kGmmTranslate) {
    const auto task = SyntheticTask::make(config.mixture);
    data.invariant_mask = task.invariant_mask;
    data.target_mixture = task.target;
  }
  return data;
}

std::shared_ptr<const EncoderParams> load_encoder(const RunConfig& config) {
  const auto path = config.encoder_checkpoint();
  if (!fs::exists(path))
    throw MissingCheckpointError("encoder checkpoint '" + path.string() + "' not found; run train-encoder first");
  return std::make_shared<const EncoderParams>(load_checkpoint(path, config.encoder_config()));
}

std::shared_ptr<const ScoreFunction> load_score(const RunConfig& config, const TaskBundle& data) {
  if (config.score_kind == ScoreKind::kAnalytic) {
    if (!data.target_mixture) throw ConfigError("analytic score needs a mixture task");
    return std::make_shared<const AnalyticGmmScore>(*data.target_mixture, config.schedule);
  }
  const auto path = config.score_checkpoint();
  if (!fs::exists(path))
    throw MissingCheckpointError("score checkpoint '" + path.string() + "' not found; run train-score first");
  return std::make_shared<const NetScore>(load_checkpoint(path, config.score.network(config.data_dim())),
                                          config.schedule);
}

EvalTask make_eval_task(const RunConfig& config, const TaskBundle& data, bool need_encoder) {
  EvalTask task;
  task.id = std::string(to_string(config.task));
  task.sources = data.eval_source;
  task.target_reference = data.reference_target;
  task.score = load_score(config, data);
  if (need_encoder) task.encoder = load_encoder(config);
  task.schedule = config.schedule;
  task.invariant_mask = data.invariant_mask;
  task.target_mixture = data.target_mixture;
  task.image = config.task == TaskKind::kImageTranslate;
  return task;
}

void cmd_train_encoder(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const auto data = generate_task_data(config);
  std::vector<Vector> pool = data.train_source;
  pool.insert(pool.end(), data.train_target.begin(), data.train_target.end());

  Rng rng(stream_seed(config, kEncoderTraining));
  log << "training encoder on " << pool.size() << " samples for " << config.train.iterations << " iterations\n";
  const auto trained =
      train_encoder(pool, config.transform(), config.schedule, config.encoder_config(), config.train, rng);
  log << "final loss " << format_double(trained.losses.back()) << '\n';

  save_checkpoint(trained.params, config.encoder_checkpoint());
  log << "wrote " << config.encoder_checkpoint().string() << '\n';
  const auto table = loss_table(trained.losses);
  write_csv(config.out / "encoder_loss.csv", table, log);
  write_text(config.out / "encoder_loss.svg", loss_chart("Encoder NT-Xent loss", table), log);
}

void cmd_train_score(const RunConfig& config, std::ostream& log) {
  if (config.score_kind == ScoreKind::kAnalytic)
    throw ConfigError("score.kind = analytic needs no training; set score.kind = net");
  ensure_out_dir(config);
  const auto data = generate_task_data(config);

  Rng rng(stream_seed(config, kScoreTraining));
  log << "training score network on " << data.train_target.size() << " target samples for "
      << config.score.iterations << " iterations\n";
  const auto trained = dsm_train_score_net(data.train_target, config.schedule, config.score, rng);
  log << "final loss " << format_double(trained.losses.back()) << '\n';

  save_checkpoint(trained.score->params(), config.score_checkpoint());
  log << "wrote " << config.score_checkpoint().string() << '\n';
  const auto table = loss_table(trained.losses);
  write_csv(config.out / "score_loss.csv", table, log);
  write_text(config.out / "score_loss.svg", loss_chart("Score network denoising loss", table), log);
}

void cmd_translate(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const auto data = generate_task_data(config);
  const auto task = make_eval_task(config, data, config.guidance.lambda != 0.0);
  log << "translating " << task.sources.size() << " samples (lambda=" << format_double(config.guidance.lambda)
      << ", P=" << format_double(config.guidance.initial_time) << ", R=" << config.guidance.steps << ")\n";
  const auto cell = evaluate(task, config.guidance, config.seed);

  const Eigen::Index d = config.data_dim();
  std::vector<std::string> header{"item"};
  for (Eigen::Index j = 0; j < d; ++j) header.push_back("x0_" + std::to_string(j));
  for (Eigen::Index j = 0; j < d; ++j) header.push_back("y0_" + std::to_string(j));
  CsvTable translations(header);
  for (std::size_t k = 0; k < cell.results.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(format_double(task.sources[k](j)));
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(format_double(cell.results[k].output(j)));
    translations.add_row(std::move(row));
  }

  CsvTable trace({"step", "t", "similarity_mean", "guidance_norm_mean"});
  const std::size_t steps = cell.results.front().steps.size();
  for (std::size_t s = 0; s < steps; ++s) {
    double sim = 0.0, norm = 0.0;
    for (const auto& r : cell.results) {
      sim += r.steps[s].similarity;
      norm += r.steps[s].guidance_norm;
    }
    const double n = static_cast<double>(cell.results.size());
    trace.add_row({std::to_string(s), format_double(cell.results.front().steps[s].t), format_double(sim / n),
                   format_double(norm / n)});
  }

  write_csv(config.out / "translations.csv", translations, log);
  write_csv(config.out / "trace.csv", trace, log);
  write_csv(config.out / "metrics.csv", metrics_table({cell.row}), log);
}

void cmd_ablate(const RunConfig& config, std::ostream& log) {
  ensure_out_dir(config);
  const auto data = generate_task_data(config);
  const auto task = make_eval_task(config, data, true);
  const std::size_t steps = config.guidance.steps;

  AblationGrid grid{{{Similarity::kCosine, config.ablate_lambdas_cosine},
                     {Similarity::kNegL2, config.ablate_lambdas_neg_l2}},
                    config.ablate_P,
                    steps};
  log << "ablation grid: " << grid.cell_count() << " cells of " << task.sources.size() << " samples\n";
  const auto cells = ablation_sweep(task, grid, config.seed);

  AblationGrid baseline{{{config.guidance.similarity, {0.0}}}, config.ablate_P, steps};
  const auto base_cells = ablation_sweep(task, baseline, config.seed);

  AblationGrid sweep{{{config.guidance.similarity, {config.guidance.lambda}}}, config.sweep_P, steps};
  log << "P sweep: " << sweep.cell_count() << " cells\n";
  const auto sweep_cells = ablation_sweep(task, sweep, config.seed);

  // First perturbed state of item 0 per cell; identical rows show the pairing.
  std::vector<std::string> header{"similarity", "lambda", "P"};
  for (Eigen::Index j = 0; j < config.data_dim(); ++j) header.push_back("start_" + std::to_string(j));
  CsvTable probe(header);
  for (const auto* group : {&base_cells, &cells}) {
    for (const auto& c : *group) {
      std::vector<std::string> row{std::string(to_string(c.row.similarity)), format_double(c.row.lambda),
                                   format_double(c.row.initial_time)};
      const Vector& start = c.results.front().start;
      for (Eigen::Index j = 0; j < start.size(); ++j) row.push_back(format_double(start(j)));
      probe.add_row(std::move(row));
    }
  }

  write_csv(config.out / "ablation.csv", metrics_table(rows_of(cells)), log);
  write_csv(config.out / "ablation_baseline.csv", metrics_table(rows_of(base_cells)), log);
  write_csv(config.out / "ablation_probe.csv", probe, log);
  const auto sweep_table = metrics_table(rows_of(sweep_cells));
  write_csv(config.out / "p_sweep.csv", sweep_table, log);
  write_text(config.out / "p_sweep.svg", p_sweep_chart(sweep_table), log);
}

void cmd_report(const RunConfig& config, std::ostream& log) {
  CsvTable report(metrics_header());
  bool any = false;
  for (const char* name : {"metrics.csv", "ablation_baseline.csv", "ablation.csv", "p_sweep.csv"}) {
    const auto path = config.out / name;
    if (!fs::exists(path)) continue;
    const auto table = CsvTable::read(path);
    if (table.header() != metrics_header()) throw ConfigError(path.string() + " does not have the metrics header");
    for (const auto& row : table.rows()) report.add_row(row);
    any = true;
  }
  if (!any) throw Error("nothing to report in '" + config.out.string() + "'; run translate or ablate first");

  if (const auto p = config.out / "encoder_loss.csv"; fs::exists(p))
    write_text(config.out / "encoder_loss.svg", loss_chart("Encoder NT-Xent loss", CsvTable::read(p)), log);
  if (const auto p = config.out / "score_loss.csv"; fs::exists(p))
    write_text(config.out / "score_loss.svg", loss_chart("Score network denoising loss", CsvTable::read(p)), log);
  if (const auto p = config.out / "p_sweep.csv"; fs::exists(p))
    write_text(config.out / "p_sweep.svg", p_sweep_chart(CsvTable::read(p)), log);
  if (const auto p = config.out / "trace.csv"; fs::exists(p)) {
    const auto trace = CsvTable::read(p);
    write_text(config.out / "trace.svg",
               line_chart("Mean similarity along the reverse trajectory", "t", "S",
                          {{"mean S", numeric_column(trace, "t"), numeric_column(trace, "similarity_mean")}}),
               log);
  }
  write_csv(config.out / "report.csv", report, log);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train-encoder", "train-score", "translate", "ablate", "report"};
  return names;
}

void run_command(std::string_view name, const RunConfig& config, std::ostream& log) {
  if (name == "train-encoder") return cmd_train_encoder(config, log);
  if (name == "train-score") return cmd_train_score(config, log);
  if (name == "translate") return cmd_translate(config, log);
  if (name == "ablate") return cmd_ablate(config, log);
  if (name == "report") return cmd_report(config, log);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

}  // namespace csde::app
