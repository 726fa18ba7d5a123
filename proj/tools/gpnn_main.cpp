#include <CLI11.hpp>
#include <iostream>

#include "gpnn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nearest-neighbour GP regression engine and simulation harness"};
  app.require_subcommand(1);

  gpnn::CliRequest req;
  std::string config, out;
  std::uint64_t seed = 0;

  const std::map<std::string, std::string> help{
      {"rates", "risk-vs-n curve and log-log slope"},
      {"landscape", "risk as a function of one hyperparameter, per n"},
      {"derivatives", "five-point-stencil risk derivatives vs n"},
      {"calibrate", "calibration experiment (simulation) or alpha from a calibration CSV"},
      {"fit", "block-diagonal likelihood hyperparameter fit"},
      {"predict", "batch prediction of a test CSV"},
      {"workflow", "fit -> calibrate -> predict end to end"},
      {"selfcheck", "property suites (bounds, inequalities, gradients, determinism)"}};
  for (const auto& name : gpnn::command_names()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    auto* c = sub->add_option("--config", config, "JSON config file");
    if (name != "selfcheck") c->required();
    sub->add_option("--out", out, "output directory (overrides config.output)");
    sub->add_option("--seed", seed, "master seed (overrides config.master_seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gpnn::kExitInputError;
  }

  CLI::App* sub = app.get_subcommands().front();
  req.command = sub->get_name();
  if (!config.empty()) req.config = config;
  if (!out.empty()) req.out = out;
  if (sub->count("--seed")) req.seed = seed;
  return gpnn::run_cli(req, std::cout, std::cerr);
}
