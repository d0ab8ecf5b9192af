// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "espkit/experiment.hpp"

namespace {

struct SubcommandArgs {
  std::string config_path;
  std::string out_dir = ".";
  int threads = -1;
  std::optional<std::uint64_t> seed;
};

void add_common_options(CLI::App* cmd, SubcommandArgs* args) {
  cmd->add_option("--config", args->config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--threads", args->threads,
                  "worker threads (0 = machine parallelism)");
  cmd->add_option("--seed", args->seed, "master seed override");
}

int run(const std::string& kind, const SubcommandArgs& args) {
  std::ifstream in(args.config_path, std::ios::binary);
  if (!in) {
    std::cerr << "espkit: cannot read config " << args.config_path << "\n";
    return 2;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();

  esp::ExperimentConfig config;
  try {
    config = esp::parse_config(buffer.str());
  } catch (const esp::ConfigError& e) {
    std::cerr << "espkit: " << args.config_path << ": " << e.what() << "\n";
    return 2;
  }
  if (config.kind != kind) {
    std::cerr << "espkit: config kind '" << config.kind
              << "' does not match subcommand '" << kind << "'\n";
    return 2;
  }

  esp::RunOptions options;
  options.out_dir = args.out_dir;
  if (args.threads >= 0) options.threads = args.threads;
  options.seed_override = args.seed;
  return esp::run_config(config, options);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"espkit: empirical saddle point estimation experiments"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"rate-sweep", "stability", "mdp",
                                          "game", "solve"};
  std::vector<SubcommandArgs> args(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(kinds[i], "run a " + kinds[i] + " experiment");
    add_common_options(cmd, &args[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0, bad usage exits 2
  }

  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (app.get_subcommand(kinds[i])->parsed()) return run(kinds[i], args[i]);
  return 2;
}
