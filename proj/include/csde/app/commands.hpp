#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "csde/app/config.hpp"
#include "csde/errors.hpp"
#include "csde/evaluation.hpp"

namespace csde::app {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,              // bad flags or malformed / invalid config
  kExitMissingCheckpoint = 3,  // a required checkpoint file does not exist
  kExitIncompatible = 4,       // checkpoint shape, version or format mismatch
  kExitNumerical = 5,          // non-finite values during training or sampling
};

class MissingCheckpointError : public Error {
 public:
  using Error::Error;
};

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e);

/// Data and models shared by the evaluation commands.
struct TaskBundle {
  std::vector<Vector> train_source;
  std::vector<Vector> train_target;
  std::vector<Vector> eval_source;
  std::vector<Vector> reference_target;
  std::vector<bool> invariant_mask;
  std::optional<GaussianMixture> target_mixture;
};

/// Deterministic data for `config`: each set has its own child stream of config.seed.
TaskBundle generate_task_data(const RunConfig& config);

/// EvalTask over the evaluation sources. The encoder is loaded when
/// `need_encoder`; the score is analytic or loaded from its checkpoint.
EvalTask make_eval_task(const RunConfig& config, const TaskBundle& data, bool need_encoder);

std::shared_ptr<const EncoderParams> load_encoder(const RunConfig& config);
std::shared_ptr<const ScoreFunction> load_score(const RunConfig& config, const TaskBundle& data);

void cmd_train_encoder(const RunConfig& config, std::ostream& log);
void cmd_train_score(const RunConfig& config, std::ostream& log);
void cmd_translate(const RunConfig& config, std::ostream& log);
void cmd_ablate(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);

/// Dispatches by name; throws ConfigError for an unknown command.
void run_command(std::string_view name, const RunConfig& config, std::ostream& log);

const std::vector<std::string>& command_names();

}  // namespace csde::app
