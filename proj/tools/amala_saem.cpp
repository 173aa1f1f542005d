// Command-line front end: one subcommand per experiment kind.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <omp.h>

#include "CLI11.hpp"
#include "amala/config.hpp"
#include "amala/experiments.hpp"
#include "amala/log.hpp"

int main(int argc, char** argv) {
  CLI::App app{"AMALA-within-SAEM estimation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool print_config = false;

  const std::pair<const char*, const char*> commands[] = {
      {"bench-sampler", "AMALA vs MALA on a rotated anisotropic Gaussian"},
      {"fit-toy", "SAEM on the random-effects model, compared with its closed-form ML"},
      {"clt-study", "replicated toy fits and the spread of one parameter"},
      {"fit-template", "estimate a deformable template from images"},
      {"sample-synthetic", "draw images from a template model"},
      {"classify", "score images against fitted class models"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI-style experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides experiment.output)");
    sub->add_option("--seed", seed, "master seed (overrides experiment.seed)");
    sub->add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  amala::ExperimentConfig config;
  try {
    const amala::ExperimentKind kind = amala::parse_experiment_kind(command);
    config = config_path.empty() ? amala::ExperimentConfig::defaults(kind) : amala::parse_config(config_path);
    if (config.kind != kind) {
      std::cerr << "error: config is for '" << amala::to_string(config.kind) << "', not '" << command << "'\n";
      return 2;
    }
    if (!out_dir.empty()) config.output = out_dir;
    if (seed) config.seed = *seed;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  if (print_config) {
    amala::write_config(std::cout, config);
    return 0;
  }
  if (threads > 0) omp_set_num_threads(threads);
  const int rc = amala::run_experiment(config);
  if (rc != 0) std::cerr << "error: run failed, see " << config.output << "/FAILED\n";
  return rc;
}
