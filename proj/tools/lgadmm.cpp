#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lgadmm/harness.hpp"

int main(int argc, char** argv) {
  namespace h = lgadmm::harness;
  h::RunConfig config;
  std::string command;
  double gamma = 0.0;
  double tolerance = 0.0;
  double sigma = 0.0;
  std::string grid;
  std::string out = config.out.string();

  CLI::App app{"Linearized generalized ADMM solver and calibration benchmark"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.add_option("command", command, "solve | gamma-sweep | baseline-compare | certify")
      ->required()
      ->check(CLI::IsMember({"solve", "gamma-sweep", "baseline-compare", "certify"}));
  app.add_option("--n", config.n, "matrix order")->capture_default_str();
  app.add_option("--seed", config.seed, "instance seed")->capture_default_str();
  app.add_option("--rho", config.rho, "penalty parameter")->capture_default_str();
  auto* gamma_opt = app.add_option("--gamma", gamma, "relaxation factor in (0, 2)");
  app.add_option("--gamma-grid", grid, "sweep grid: a,b,c or start:stop:step");
  auto* tol_opt = app.add_option("--tol", tolerance, "stopping tolerance");
  app.add_option("--max-iter", config.max_iterations, "iteration cap")->capture_default_str();
  app.add_flag("--strict", config.strict, "require the convergence preconditions");
  app.add_option("--repeat", config.repeat, "seeds per grid point")->capture_default_str();
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_flag("--negative-control", config.negative_control,
               "corrupt the recorded trajectory before certifying");
  auto* sigma_opt = app.add_option("--sigma", sigma, "proximal metric scale (P_i = sigma I)");
  app.add_option("--workers", config.workers, "sweep worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return h::kExitConfig;
  }

  try {
    config.command = h::parse_command(command);
    if (gamma_opt->count() > 0) config.gamma = gamma;
    if (tol_opt->count() > 0) config.tolerance = tolerance;
    if (sigma_opt->count() > 0) config.sigma = sigma;
    if (!grid.empty()) config.gamma_grid = h::parse_grid(grid);
    config.out = out;
  } catch (const lgadmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return h::kExitConfig;
  }
  return h::run(config);
}
