// Command-line experiment runner.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "disco/error.hpp"
#include "disco/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::string config_positional;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config_file", c.config_positional, "Experiment config (JSON)");
  cmd->add_option("--config,-c", c.config, "Experiment config (JSON)");
  cmd->add_option("--seed", c.seed, "Override controller.seed");
  cmd->add_option("--epochs", c.epochs, "Override training.epochs");
  cmd->add_option("--out", c.out, "Override output_dir");
}

disco::ExperimentConfig resolve(const Common& c) {
  const std::string path = c.config.empty() ? c.config_positional : c.config;
  disco::ExperimentConfig cfg = path.empty() ? disco::ExperimentConfig{} : disco::load_config(path);
  if (c.seed) cfg.controller.seed = *c.seed;
  if (c.epochs) cfg.training.epochs = *c.epochs;
  if (c.out) cfg.output_dir = *c.out;
  disco::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed port-Hamiltonian neural controllers: training and certification"};
  app.require_subcommand(1);

  Common common;
  std::string controller;
  int horizon_mult = 10;
  std::vector<double> fractions{0.05, 0.25, 0.5, 0.75, 1.0};

  auto* train = app.add_subcommand("train", "Train a controller and write artifacts");
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Long-horizon evaluation of a trained controller");
  add_common(evaluate, common);
  evaluate->add_option("--controller", controller, "Controller JSON (default: <out>/controller.json)");
  evaluate->add_option("--horizon-mult", horizon_mult, "Horizon in multiples of T");

  auto* compare = app.add_subcommand("compare-mlp", "Time-varying, time-invariant and MLP comparison table");
  add_common(compare, common);

  auto* early = app.add_subcommand("early-stop", "Evaluate partially trained controllers");
  add_common(early, common);
  early->add_option("--fractions", fractions, "Training fractions in (0, 1]");

  auto* diagnose = app.add_subcommand("diagnose", "Sensitivity, distributedness and dissipation reports");
  add_common(diagnose, common);
  diagnose->add_option("--controller", controller, "Controller JSON (default: <out>/controller.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    const disco::ExperimentConfig cfg = resolve(common);
    const std::string ctrl = controller.empty() ? cfg.output_dir + "/controller.json" : controller;
    if (*train) return disco::cmd_train(cfg, std::cout);
    if (*evaluate) return disco::cmd_evaluate(cfg, ctrl, horizon_mult, std::cout);
    if (*compare) return disco::cmd_compare_mlp(cfg, std::cout);
    if (*early) return disco::cmd_early_stop(cfg, fractions, std::cout);
    if (*diagnose) return disco::cmd_diagnose(cfg, ctrl, std::cout);
  } catch (const disco::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return disco::kExitDivergence;
  } catch (const disco::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return disco::kExitValidation;
  }
  return disco::kExitOk;
}
