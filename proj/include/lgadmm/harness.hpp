#ifndef LGADMM_HARNESS_HPP_
#define LGADMM_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lgadmm/certificates.hpp"
#include "lgadmm/correlation.hpp"

namespace lgadmm::harness {

enum class Command { kSolve, kGammaSweep, kBaselineCompare, kCertify };

Command parse_command(const std::string& name);
const char* to_string(Command command);

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitCertificate = 4,
};

struct RunConfig {
  Command command = Command::kSolve;
  Index n = 50;
  std::uint64_t seed = 1;
  double rho = 1.0;
  // Unset means 1.9 for solve and 1.5 for certify.
  std::optional<double> gamma;
  std::vector<double> gamma_grid;  // empty means 0.2, 0.4, ..., 1.8
  // Unset means 1e-6, or 1e-8 for certify.
  std::optional<double> tolerance;
  long max_iterations = 20000;
  bool strict = false;
  int repeat = 1;
  std::filesystem::path out = "out";
  bool negative_control = false;
  // Unset means 0.5, or 4 for certify.
  std::optional<double> sigma;
  int workers = 0;  // 0 means hardware concurrency

  double effective_gamma() const;
  double effective_tolerance() const;
  double effective_sigma() const;
  std::vector<double> effective_grid() const;
};

/// Throws ConfigError on values outside their domains.
void validate(const RunConfig& config);

/// "a,b,c" or "start:stop:step" (inclusive of stop).
std::vector<double> parse_grid(const std::string& text);

struct SolveSummary {
  double gamma = 0.0;
  std::uint64_t seed = 0;
  long iterations = 0;
  double objective = 0.0;
  double final_epsilon = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
};

/// Calibration solve from the zero start with P_i = sigma I.
struct CalibrationRun {
  SolveSummary summary;
  SolveResult<double> result;
};
CalibrationRun run_calibration(const correlation::CalibrationInstance& instance, double rho,
                               double gamma, double sigma, double tolerance, long max_iterations,
                               bool strict, bool record_trajectory = false);

std::string summary_json(const SolveSummary& summary);

/// Writes trajectory.csv, summary.json and instance/ under config.out.
SolveSummary run_solve(const RunConfig& config);

struct SweepRow {
  double gamma = 0.0;
  double mean_iterations = 0.0;
  double mean_seconds = 0.0;
  double mean_objective = 0.0;
  int converged_runs = 0;
};

/// Every (gamma, seed) cell with seeds seed .. seed + repeat - 1, solved in a
/// worker pool. Writes sweep.csv (means) and sweep_runs.csv (cells).
std::vector<SweepRow> run_gamma_sweep(const RunConfig& config);

struct BaselineComparison {
  SolveSummary unit;     // gamma = 1
  SolveSummary relaxed;  // gamma = 1.9
  std::vector<double> unit_objective;
  std::vector<double> relaxed_objective;
  bool unit_monotone_after_burn_in = true;
  bool relaxed_monotone_after_burn_in = true;
};

/// Writes objective_curves.csv and comparison.csv.
BaselineComparison run_baseline_compare(const RunConfig& config);

/// True when the curve never rises past its burn-in prefix (first tenth).
bool monotone_after_burn_in(const std::vector<double>& curve, double relative_tolerance = 1e-9);

struct CertifyOutcome {
  std::vector<CertificateReport> reports;
  double sigma_gamma = 0.0;
  bool passed = true;
};

/// Strict run with trajectory, reference point and every certificate check.
/// Writes certificates.json. With negative_control, one recorded iterate is
/// displaced before checking.
CertifyOutcome run_certify(const RunConfig& config);

std::string certificate_json(const CertificateReport& report);

/// Dispatches the command and maps failures to exit codes.
int run(const RunConfig& config);

}  // namespace lgadmm::harness

#endif  // LGADMM_HARNESS_HPP_
