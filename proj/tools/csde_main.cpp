#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csde/app/commands.hpp"
#include "csde/app/config.hpp"
#include "csde/io.hpp"

namespace {

const char* const kFooter = R"(Commands:
  train-encoder   train the contrastive encoder; writes encoder.ckpt, encoder_loss.csv/.svg
  train-score     train the score network (score.kind = net); writes score.ckpt, score_loss.csv/.svg
  translate       guided translation of the evaluation set; writes translations.csv, trace.csv, metrics.csv
  ablate          similarity x lambda grid and P sweep; writes ablation.csv, ablation_baseline.csv,
                  ablation_probe.csv, p_sweep.csv, p_sweep.svg
  report          collects metrics CSVs into report.csv and redraws the SVG plots

Exit codes:
  0  success
  1  other failure (I/O, internal error)
  2  usage error, malformed or invalid configuration
  3  missing checkpoint
  4  incompatible checkpoint (shape, version or format mismatch)
  5  numerical failure (non-finite values in training or sampling)

Environment:
  CSDE_THREADS    maximum number of worker threads)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive-guided SDE translation toolkit", "csde"};
  app.footer(kFooter);

  std::string command;
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  bool print_config = false;

  app.add_option("command", command, "Subcommand to run")
      ->required()
      ->check(CLI::IsMember(csde::app::command_names()));
  app.add_option("--config", config_path, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out, "Output directory (overrides the config)");
  app.add_option("--override", overrides, "Set a config key, key=value; repeatable")->take_all();
  app.add_flag("--print-config", print_config, "Print the resolved configuration before running");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : csde::app::kExitUsage;
  }

  try {
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (out) overrides.push_back("out=" + *out);
    const std::string text = config_path.empty() ? std::string() : csde::read_file(config_path);
    const auto config = csde::app::RunConfig::parse(text, overrides);
    if (print_config) std::cout << config.serialize();
    csde::app::run_command(command, config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "csde " << command << ": error: " << e.what() << '\n';
    return csde::app::exit_code_for(e);
  }
  return 0;
}
