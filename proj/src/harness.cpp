#include "lgadmm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lgadmm/io.hpp"

namespace lgadmm::harness {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::ordered_json;

constexpr double kUnitGamma = 1.0;
constexpr double kRelaxedGamma = 1.9;
constexpr int kErgodicProbes = 10;
constexpr int kStepProbes = 3;
constexpr long kReferenceCapFactor = 10;
constexpr double kReferenceTolerance = 1e-10;

std::string csv_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::shared_ptr<const correlation::CalibrationInstance> make_instance(Index n, std::uint64_t seed) {
  return std::make_shared<const correlation::CalibrationInstance>(
      correlation::generate_instance(n, seed));
}

// Gaussian primal parts projected onto each X_i; Gaussian dual.
std::vector<PrimalDualPoint<double>> sample_probes(const BlockProblem<double>& problem, int count,
                                                   std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  auto gaussian = [&](Index size) {
    Vector<double> v(size);
    for (Index i = 0; i < size; ++i) v(i) = normal(engine);
    return v;
  };
  std::vector<PrimalDualPoint<double>> probes;
  for (int p = 0; p < count; ++p) {
    PrimalDualPoint<double> w;
    for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
      w.primal.push_back(problem.block(i).project(gaussian(problem.block(i).dim)));
    }
    w.dual = gaussian(problem.constraint_dim());
    probes.push_back(std::move(w));
  }
  return probes;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "solve") return Command::kSolve;
  if (name == "gamma-sweep") return Command::kGammaSweep;
  if (name == "baseline-compare") return Command::kBaselineCompare;
  if (name == "certify") return Command::kCertify;
  throw ConfigError("unknown command '" + name + "'");
}

const char* to_string(Command command) {
  switch (command) {
    case Command::kSolve: return "solve";
    case Command::kGammaSweep: return "gamma-sweep";
    case Command::kBaselineCompare: return "baseline-compare";
    case Command::kCertify: return "certify";
  }
  return "?";
}

double RunConfig::effective_gamma() const {
  if (gamma) return *gamma;
  return command == Command::kCertify ? 1.5 : kRelaxedGamma;
}

double RunConfig::effective_tolerance() const {
  if (tolerance) return *tolerance;
  return command == Command::kCertify ? 1e-8 : 1e-6;
}

double RunConfig::effective_sigma() const {
  if (sigma) return *sigma;
  return command == Command::kCertify ? 4.0 : 0.5;
}

std::vector<double> RunConfig::effective_grid() const {
  return gamma_grid.empty() ? parse_grid("0.2:1.8:0.2") : gamma_grid;
}

void validate(const RunConfig& config) {
  auto in_range = [](double g) { return g > 0.0 && g < 2.0; };
  if (config.n < 2) throw ConfigError("--n must be at least 2");
  if (!(config.rho > 0.0)) throw ConfigError("--rho must be positive");
  if (!in_range(config.effective_gamma())) {
    throw ConfigError("--gamma must lie in the open interval (0, 2), got " +
                      csv_number(config.effective_gamma()));
  }
  for (double g : config.gamma_grid) {
    if (!in_range(g)) throw ConfigError("grid value " + csv_number(g) + " is outside (0, 2)");
  }
  if (!(config.effective_tolerance() > 0.0)) throw ConfigError("--tol must be positive");
  if (config.max_iterations < 1) throw ConfigError("--max-iter must be at least 1");
  if (config.repeat < 1) throw ConfigError("--repeat must be at least 1");
  if (!(config.effective_sigma() >= 0.0)) throw ConfigError("--sigma must be nonnegative");
  if (config.workers < 0) throw ConfigError("--workers must be nonnegative");
}

std::vector<double> parse_grid(const std::string& text) {
  auto to_double = [&text](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size()) throw ConfigError("bad grid value in '" + text + "'");
    return v;
  };
  std::vector<std::string> tokens;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(text);
  for (std::string token; std::getline(ss, token, sep);) tokens.push_back(token);

  std::vector<double> out;
  if (sep == ':') {
    if (tokens.size() != 3) throw ConfigError("range grid must be start:stop:step");
    const double start = to_double(tokens[0]);
    const double stop = to_double(tokens[1]);
    const double step = to_double(tokens[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("range grid needs step > 0, stop >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) {
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    for (const auto& t : tokens) out.push_back(to_double(t));
  }
  if (out.empty()) throw ConfigError("empty gamma grid");
  return out;
}

CalibrationRun run_calibration(const correlation::CalibrationInstance& instance, double rho,
                               double gamma, double sigma, double tolerance, long max_iterations,
                               bool strict, bool record_trajectory) {
  auto shared = std::make_shared<const correlation::CalibrationInstance>(instance);
  const BlockProblem<double> problem = correlation::build_problem(shared);
  SolverConfig<double> config = correlation::calibration_config(instance.n, rho, gamma, sigma);
  config.tolerance = tolerance;
  config.max_iterations = max_iterations;
  config.strict_theory_mode = strict;
  config.record_trajectory = record_trajectory;

  const auto start = Clock::now();
  CalibrationRun run{{}, solve(problem, config, problem.zero_point())};
  const std::chrono::duration<double> elapsed = Clock::now() - start;
  run.summary.gamma = gamma;
  run.summary.seed = instance.seed;
  run.summary.iterations = run.result.iterations;
  run.summary.objective = evaluate_objective(problem, run.result.final_point);
  run.summary.final_epsilon = run.result.final_epsilon;
  run.summary.wall_seconds = elapsed.count();
  run.summary.converged = run.result.converged;
  return run;
}

std::string summary_json(const SolveSummary& summary) {
  json j;
  j["iterations"] = summary.iterations;
  j["objective"] = summary.objective;
  j["final_epsilon"] = summary.final_epsilon;
  j["wall_seconds"] = summary.wall_seconds;
  j["converged"] = summary.converged;
  return j.dump(2) + "\n";
}

SolveSummary run_solve(const RunConfig& config) {
  validate(config);
  const auto instance = correlation::generate_instance(config.n, config.seed);
  const auto run = run_calibration(instance, config.rho, config.effective_gamma(),
                                   config.effective_sigma(), config.effective_tolerance(),
                                   config.max_iterations, config.strict);
  std::ostringstream csv;
  write_trajectory_csv(csv, run.result.reports, 3);
  write_file_atomic(config.out / "trajectory.csv", csv.str());
  write_file_atomic(config.out / "summary.json", summary_json(run.summary));
  correlation::dump_instance(config.out / "instance", instance);
  return run.summary;
}

std::vector<SweepRow> run_gamma_sweep(const RunConfig& config) {
  validate(config);
  const std::vector<double> grid = config.effective_grid();
  struct Cell {
    double gamma;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double g : grid) {
    for (int r = 0; r < config.repeat; ++r) cells.push_back({g, config.seed + static_cast<std::uint64_t>(r)});
  }

  std::vector<std::optional<SolveSummary>> results(cells.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const auto instance = correlation::generate_instance(config.n, cells[i].seed);
        results[i] = run_calibration(instance, config.rho, cells[i].gamma, config.effective_sigma(),
                                     config.effective_tolerance(), config.max_iterations,
                                     config.strict)
                         .summary;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t pool_size = std::min<std::size_t>(
      cells.size(), config.workers > 0 ? static_cast<std::size_t>(config.workers) : hardware);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < pool_size; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRow> rows;
  std::ostringstream runs_csv;
  runs_csv << "gamma,seed,iterations,seconds,objective,final_epsilon,converged\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepRow row;
    row.gamma = grid[g];
    for (int r = 0; r < config.repeat; ++r) {
      const SolveSummary& s = *results[g * static_cast<std::size_t>(config.repeat) + r];
      row.mean_iterations += static_cast<double>(s.iterations);
      row.mean_seconds += s.wall_seconds;
      row.mean_objective += s.objective;
      row.converged_runs += s.converged ? 1 : 0;
      runs_csv << csv_number(s.gamma) << ',' << s.seed << ',' << s.iterations << ','
               << csv_number(s.wall_seconds) << ',' << csv_number(s.objective) << ','
               << csv_number(s.final_epsilon) << ',' << (s.converged ? 1 : 0) << '\n';
    }
    row.mean_iterations /= config.repeat;
    row.mean_seconds /= config.repeat;
    row.mean_objective /= config.repeat;
    rows.push_back(row);
  }
  std::ostringstream csv;
  csv << "gamma,mean_iterations,mean_seconds,mean_objective\n";
  for (const auto& row : rows) {
    csv << csv_number(row.gamma) << ',' << csv_number(row.mean_iterations) << ','
        << csv_number(row.mean_seconds) << ',' << csv_number(row.mean_objective) << '\n';
  }
  write_file_atomic(config.out / "sweep.csv", csv.str());
  write_file_atomic(config.out / "sweep_runs.csv", runs_csv.str());
  return rows;
}

bool monotone_after_burn_in(const std::vector<double>& curve, double relative_tolerance) {
  const std::size_t burn_in = curve.size() / 10;
  for (std::size_t k = burn_in + 1; k < curve.size(); ++k) {
    if (curve[k] > curve[k - 1] + relative_tolerance * (1.0 + std::abs(curve[k - 1]))) return false;
  }
  return true;
}

BaselineComparison run_baseline_compare(const RunConfig& config) {
  validate(config);
  const auto instance = correlation::generate_instance(config.n, config.seed);
  auto curve = [](const SolveResult<double>& r) {
    std::vector<double> out;
    for (const auto& rep : r.reports) out.push_back(rep.objective);
    return out;
  };
  BaselineComparison cmp;
  {
    auto run = run_calibration(instance, config.rho, kUnitGamma, config.effective_sigma(),
                               config.effective_tolerance(), config.max_iterations, config.strict);
    cmp.unit = run.summary;
    cmp.unit_objective = curve(run.result);
  }
  {
    auto run = run_calibration(instance, config.rho, kRelaxedGamma, config.effective_sigma(),
                               config.effective_tolerance(), config.max_iterations, config.strict);
    cmp.relaxed = run.summary;
    cmp.relaxed_objective = curve(run.result);
  }
  cmp.unit_monotone_after_burn_in = monotone_after_burn_in(cmp.unit_objective);
  cmp.relaxed_monotone_after_burn_in = monotone_after_burn_in(cmp.relaxed_objective);

  std::ostringstream curves;
  curves << "k,objective_gamma_1,objective_gamma_1.9\n";
  const std::size_t rows = std::max(cmp.unit_objective.size(), cmp.relaxed_objective.size());
  for (std::size_t k = 0; k < rows; ++k) {
    curves << (k + 1) << ',';
    if (k < cmp.unit_objective.size()) curves << csv_number(cmp.unit_objective[k]);
    curves << ',';
    if (k < cmp.relaxed_objective.size()) curves << csv_number(cmp.relaxed_objective[k]);
    curves << '\n';
  }
  std::ostringstream table;
  table << "gamma,iterations,seconds,objective,epsilon,converged,monotone_after_burn_in\n";
  auto row = [&table](const SolveSummary& s, bool monotone) {
    table << csv_number(s.gamma) << ',' << s.iterations << ',' << csv_number(s.wall_seconds)
          << ',' << csv_number(s.objective) << ',' << csv_number(s.final_epsilon) << ','
          << (s.converged ? 1 : 0) << ',' << (monotone ? 1 : 0) << '\n';
  };
  row(cmp.unit, cmp.unit_monotone_after_burn_in);
  row(cmp.relaxed, cmp.relaxed_monotone_after_burn_in);
  write_file_atomic(config.out / "objective_curves.csv", curves.str());
  write_file_atomic(config.out / "comparison.csv", table.str());
  return cmp;
}

std::string certificate_json(const CertificateReport& report) {
  json j;
  j["check"] = report.check;
  j["iterations_checked"] = report.iterations_checked;
  j["worst_margin"] = number_or_null(report.worst_margin);
  j["passed"] = report.passed;
  j["skipped_reason"] = report.skipped_reason ? json(*report.skipped_reason) : json(nullptr);
  return j.dump();
}

CertifyOutcome run_certify(const RunConfig& config) {
  validate(config);
  const auto instance = make_instance(config.n, config.seed);
  const BlockProblem<double> problem = correlation::build_problem(instance);
  SolverConfig<double> solver_config = correlation::calibration_config(
      config.n, config.rho, config.effective_gamma(), config.effective_sigma());
  solver_config.strict_theory_mode = true;
  solver_config.max_iterations = config.max_iterations;
  validate_config(problem, solver_config);

  SolverConfig<double> reference_config = solver_config;
  reference_config.tolerance = kReferenceTolerance;
  reference_config.max_iterations = kReferenceCapFactor * config.max_iterations;
  const auto reference = solve(problem, reference_config, problem.zero_point());

  SolverConfig<double> run_config = solver_config;
  run_config.tolerance = config.effective_tolerance();
  run_config.record_trajectory = true;
  auto run = solve(problem, run_config, problem.zero_point());
  Trajectory<double>& trajectory = run.trajectory;

  if (config.negative_control && trajectory.iterates.size() > 2) {
    auto& target = trajectory.iterates[trajectory.iterates.size() / 2];
    const double shift = 10.0 * (1.0 + reference.final_point.stacked().norm());
    target.dual.array() += shift;
  }

  const auto metrics = assemble_metrics(problem, solver_config, MetricMode::kMatrixFree);
  CertifyOutcome outcome;
  outcome.sigma_gamma = sigma_gamma(solver_config.gamma);
  const auto& ref = reference.final_point;
  outcome.reports.push_back(fejer_check(metrics, trajectory, ref));
  outcome.reports.push_back(nonergodic_monotonicity_check(metrics, trajectory));
  outcome.reports.push_back(nonergodic_rate_check(metrics, trajectory, ref));
  outcome.reports.push_back(cross_term_check(trajectory, metrics.matrix_free.pm(),
                                             problem.last_block().linear_map));
  const long t = static_cast<long>(trajectory.auxiliaries.size()) - 1;
  if (t >= 0) {
    const auto average = ergodic_average(trajectory.auxiliaries);
    outcome.reports.push_back(ergodic_gap_check(problem, metrics, average,
                                                sample_probes(problem, kErgodicProbes, config.seed),
                                                trajectory.iterates.front(), t));
  }
  outcome.reports.push_back(step_inequality_check(
      problem, metrics, trajectory, sample_probes(problem, kStepProbes, config.seed + 1)));
  for (const auto& r : outcome.reports) outcome.passed = outcome.passed && r.passed;

  json bundle;
  bundle["n"] = config.n;
  bundle["seed"] = config.seed;
  bundle["rho"] = solver_config.rho;
  bundle["gamma"] = solver_config.gamma;
  bundle["sigma"] = config.effective_sigma();
  bundle["sigma_gamma"] = outcome.sigma_gamma;
  bundle["iterations"] = run.iterations;
  bundle["reference_iterations"] = reference.iterations;
  bundle["negative_control"] = config.negative_control;
  bundle["passed"] = outcome.passed;
  bundle["reports"] = json::array();
  for (const auto& r : outcome.reports) bundle["reports"].push_back(json::parse(certificate_json(r)));
  write_file_atomic(config.out / "certificates.json", bundle.dump(2) + "\n");
  return outcome;
}

int run(const RunConfig& config) {
  try {
    switch (config.command) {
      case Command::kSolve: {
        const auto s = run_solve(config);
        std::cout << summary_json(s);
        return kExitOk;
      }
      case Command::kGammaSweep: {
        for (const auto& row : run_gamma_sweep(config)) {
          std::cout << "gamma " << row.gamma << ": mean iterations " << row.mean_iterations
                    << ", mean objective " << row.mean_objective << '\n';
        }
        return kExitOk;
      }
      case Command::kBaselineCompare: {
        const auto cmp = run_baseline_compare(config);
        std::cout << "gamma 1: " << cmp.unit.iterations << " iterations, objective "
                  << cmp.unit.objective << "\ngamma 1.9: " << cmp.relaxed.iterations
                  << " iterations, objective " << cmp.relaxed.objective << '\n';
        return kExitOk;
      }
      case Command::kCertify: {
        const auto outcome = run_certify(config);
        for (const auto& r : outcome.reports) {
          std::cout << (r.skipped_reason ? "SKIP " : r.passed ? "PASS " : "FAIL ") << r.check
                    << " worst_margin=" << r.worst_margin << '\n';
        }
        std::cout << "sigma_gamma=" << outcome.sigma_gamma << '\n';
        return outcome.passed ? kExitOk : kExitCertificate;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace lgadmm::harness
