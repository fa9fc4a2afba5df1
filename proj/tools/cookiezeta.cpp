// cookiezeta <command> --config <path> [--out <dir>] [--cache <dir>] [--threads n]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cookiezeta/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = cookiezeta::cli;
  CLI::App app{"Thermodynamic formalism and multifractal zeta functions for cookie-cutter maps"};
  app.require_subcommand(1);
  cli::Options opt;
  std::string chosen;
  for (const auto& name : cli::commands()) {
    auto* sub = app.add_subcommand(name, cli::command_help(name));
    sub->add_option("--config", opt.config, "JSON run config")->required();
    sub->add_option("--out", opt.out, "output directory (default .)");
    sub->add_option("--cache", opt.cache, "level cache directory (default <out>/cache; COOKIEZETA_CACHE overrides)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return cli::run(chosen, opt);
}
