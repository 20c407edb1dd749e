// mflq: solve, simulate, verify and certify mean-field LQ problems with jumps.
#include <iostream>

#include "CLI11.hpp"
#include "mflq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-field linear-quadratic control with jumps"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  mflq::RunConfig cfg;
  double h = 0.0;

  auto add_common = [&](CLI::App* sub, bool model_required) {
    auto* model = sub->add_option("--model", cfg.model_path, "Model JSON file");
    if (model_required) model->required();
    sub->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--h", h, "Grid step override (constant coefficients only)");
    sub->add_option("--workers", cfg.workers, "Simulation threads")->capture_default_str();
    sub->add_flag("!--no-timestamp", cfg.timestamp, "Omit the timestamp from JSON output");
  };
  auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--paths", cfg.M, "Number of particles")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  };

  auto* solve = app.add_subcommand("solve", "Riccati pair, gains and optimal value");
  add_common(solve, true);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the optimal feedback law");
  add_common(simulate, true);
  add_mc(simulate);
  simulate->add_option("--save-paths", cfg.save_paths, "Write this many paths to paths.csv");

  auto* verify = app.add_subcommand("verify", "Value, stationarity and directional-derivative checks");
  add_common(verify, true);
  add_mc(verify);
  verify->add_option("--eps", cfg.eps, "Perturbation sizes")->delimiter(',')->capture_default_str();

  auto* certify = app.add_subcommand("certify", "Scenario-tree oracle battery");
  add_common(certify, false);
  certify->add_option("--steps", cfg.steps, "Tree depth for a user model")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (h != 0.0) cfg.h = h;
  const std::string name = app.get_subcommands().front()->get_name();
  cfg.command = *mflq::parse_command(name);
  return mflq::run(cfg, std::cerr);
}
