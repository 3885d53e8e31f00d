#include "balayage/error.hpp"
#include "balayage/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Domain constants, partial balayage and discrete Brenier maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool suite = false;

  const auto add = [&](const std::string& name, const std::string& help, bool config_required) {
    auto* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    return sub;
  };
  add("lambda1", "estimate lambda1 by the minimax harmonic fit", true);
  add("balayage", "partial balayage of the configured measure", true);
  add("brenier", "discrete Brenier map onto the equal-volume ball", true);
  add("proof-trace", "numerical upper-bound construction", true);
  add("oracle", "closed-form values and bounds", true);
  auto* verify = add("verify", "run the built-in domain suite", false);
  verify->add_flag("--suite", suite, "the built-in suite (the only mode)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : balayage::exit_invalid_config;
  }

  const auto* command = app.get_subcommands().front();
  try {
    auto config = config_path.empty() ? balayage::RunConfig{} : balayage::load_config(config_path);
    if (!out_dir.empty()) config.output = out_dir;
    if (command->count("--seed")) config.seed = seed;
    return balayage::run(command->get_name(), config, std::cerr);
  } catch (const balayage::Error& e) {
    return balayage::report_error(command->get_name(), e, out_dir, std::cerr);
  }
}
