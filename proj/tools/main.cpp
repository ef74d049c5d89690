#include <iostream>

#include <CLI11.hpp>

#include "selfdual/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Self-dual variational solvers for transport and evolution problems"};
  app.require_subcommand(1);
  selfdual::CommandOptions opts;
  for (const char* name : {"check-skew", "verify-asd", "solve-stationary", "solve-evolution"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "problem configuration file")->required();
    sub->add_option("--out", opts.out_dir, "directory for report.json, manifest.cfg and CSV output");
    sub->add_option("--seed", opts.seed, "seed for sampled checks")->capture_default_str();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 reports usage errors with its own codes; all of them are config errors here.
    const int code = app.exit(e);
    return code == 0 ? 0 : selfdual::kExitConfigError;
  }
  return selfdual::run_command(app.get_subcommands().front()->get_name(), opts, std::cout, std::cerr);
}
