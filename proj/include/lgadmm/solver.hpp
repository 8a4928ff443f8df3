#ifndef LGADMM_SOLVER_HPP_
#define LGADMM_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lgadmm/config.hpp"
#include "lgadmm/metrics.hpp"
#include "lgadmm/problem.hpp"
#include "lgadmm/validation.hpp"

namespace lgadmm {

// Stopping denominators below this switch a component to absolute change.
inline constexpr double kFirstStepFloor = 1e-14;

template <typename Scalar>
struct StepReport {
  long k = 0;  // index of the iterate produced by this step
  Scalar feasibility_residual = Scalar(0);
  // Per block, then the multiplier: ||z^{k+1} - z^k|| / ||z^1 - z^0||.
  std::vector<Scalar> successive_change;
  Scalar epsilon = Scalar(0);  // max of successive_change
  Scalar objective = Scalar(0);
  std::optional<Scalar> h_norm_step;  // ||w^k - w^{k+1}||_H
};

template <typename Scalar>
struct IterationState {
  long k = 0;
  PrimalDualPoint<Scalar> current;    // w^k
  PrimalDualPoint<Scalar> auxiliary;  // w-bar^{k-1}, set after the first step
  PrimalDualPoint<Scalar> previous;   // w^{k-1}
  std::vector<Scalar> first_step_norms;
};

/// w^0..w^K and the predictor points w-bar^0..w-bar^{K-1}.
template <typename Scalar>
struct Trajectory {
  std::vector<PrimalDualPoint<Scalar>> iterates;
  std::vector<PrimalDualPoint<Scalar>> auxiliaries;

  std::size_t steps() const { return auxiliaries.size(); }
};

template <typename Scalar>
struct SolveResult {
  PrimalDualPoint<Scalar> final_point;
  long iterations = 0;
  bool converged = false;
  Scalar final_epsilon = Scalar(0);
  Trajectory<Scalar> trajectory;
  std::vector<StepReport<Scalar>> reports;
};

template <typename Scalar>
IterationState<Scalar> initial_state(const BlockProblem<Scalar>& problem,
                                     const PrimalDualPoint<Scalar>& start) {
  problem.check(start);
  if (!start.all_finite()) throw ConfigError("start point is not finite");
  IterationState<Scalar> state;
  state.current = start;
  state.previous = start;
  state.auxiliary = start;
  return state;
}

namespace detail {

inline std::string component_name(std::size_t block) { return "x_" + std::to_string(block + 1); }

template <typename Scalar>
Vector<Scalar> call_oracle(const BlockProblem<Scalar>& problem, std::size_t j,
                           const Vector<Scalar>& target, const Vector<Scalar>& center, Scalar rho,
                           const SymmetricOperator<Scalar>& metric) {
  try {
    Vector<Scalar> x = problem.block(j).subproblem(target, center, rho, metric);
    if (x.size() != problem.block(j).dim) {
      throw DimensionError("oracle returned size " + std::to_string(x.size()));
    }
    return x;
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError(j, e.what());
  }
}

template <typename Scalar>
void check_parameters(const BlockProblem<Scalar>& problem, const SolverConfig<Scalar>& config) {
  if (!(config.gamma > Scalar(0) && config.gamma < Scalar(2))) {
    throw ConfigError("gamma must lie in the open interval (0, 2)");
  }
  if (!(config.rho > Scalar(0))) throw ConfigError("rho must be positive");
  if (config.proximal_metrics.size() != problem.num_blocks()) {
    throw DimensionError("expected one proximal metric per block");
  }
}

}  // namespace detail

/// x_j^{k+1} for j < m, all from the same snapshot x^k:
///   target_j = b + y^k/rho - sum_{i != j} A_i x_i^k.
/// `order` only changes the evaluation order; results do not depend on it.
template <typename Scalar>
std::vector<Vector<Scalar>> first_phase_update(const BlockProblem<Scalar>& problem,
                                               const SolverConfig<Scalar>& config,
                                               const IterationState<Scalar>& state,
                                               std::span<const std::size_t> order = {}) {
  const std::size_t last = problem.num_blocks() - 1;
  const auto& x = state.current.primal;
  const Vector<Scalar> shifted = problem.rhs() + state.current.dual / config.rho;
  std::vector<Vector<Scalar>> images;
  images.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) images.push_back(problem.block(i).linear_map.apply(x[i]));
  Vector<Scalar> total = Vector<Scalar>::Zero(problem.constraint_dim());
  for (const auto& img : images) total += img;

  std::vector<std::size_t> sequence(last);
  if (order.empty()) {
    std::iota(sequence.begin(), sequence.end(), std::size_t{0});
  } else {
    if (order.size() != last) throw DimensionError("order must list every first-phase block");
    sequence.assign(order.begin(), order.end());
  }

  auto update = [&](std::size_t j) {
    const Vector<Scalar> target = shifted - (total - images[j]);
    return detail::call_oracle(problem, j, target, x[j], config.rho, config.proximal_metrics[j]);
  };

  std::vector<Vector<Scalar>> fresh(last);
  if (config.parallel_first_phase && last > 1) {
    std::vector<std::future<Vector<Scalar>>> jobs;
    for (std::size_t j : sequence) jobs.push_back(std::async(std::launch::async, update, j));
    for (std::size_t idx = 0; idx < sequence.size(); ++idx) fresh[sequence[idx]] = jobs[idx].get();
  } else {
    for (std::size_t j : sequence) fresh[j] = update(j);
  }
  return fresh;
}

/// x_m^{k+1} with the relaxed target
///   b + y^k/rho - gamma sum_{i<m} A_i x_i^{k+1} - (1 - gamma)(b - A_m x_m^k).
template <typename Scalar>
Vector<Scalar> last_block_update(const BlockProblem<Scalar>& problem,
                                 const SolverConfig<Scalar>& config,
                                 const IterationState<Scalar>& state,
                                 const std::vector<Vector<Scalar>>& fresh_first_phase) {
  const std::size_t last = problem.num_blocks() - 1;
  if (fresh_first_phase.size() < last) throw DimensionError("first phase is incomplete");
  const auto& am = problem.last_block().linear_map;
  const Vector<Scalar>& xm = state.current.primal[last];
  const Vector<Scalar> coupled = problem.constraint_image(fresh_first_phase, 0, last);
  const Vector<Scalar> target = problem.rhs() + state.current.dual / config.rho -
                                config.gamma * coupled -
                                (Scalar(1) - config.gamma) * (problem.rhs() - am.apply(xm));
  return detail::call_oracle(problem, last, target, xm, config.rho, config.proximal_metrics[last]);
}

/// y^{k+1} = y^k - rho (gamma sum_{i<m} A_i x_i^{k+1} + (1 - gamma)(b - A_m x_m^k)
///                      + A_m x_m^{k+1} - b).
template <typename Scalar>
Vector<Scalar> multiplier_update(const BlockProblem<Scalar>& problem,
                                 const SolverConfig<Scalar>& config,
                                 const IterationState<Scalar>& state,
                                 const std::vector<Vector<Scalar>>& fresh_primal) {
  if (fresh_primal.size() != problem.num_blocks()) throw DimensionError("fresh primal incomplete");
  const std::size_t last = problem.num_blocks() - 1;
  const auto& am = problem.last_block().linear_map;
  const Vector<Scalar> coupled = problem.constraint_image(fresh_primal, 0, last);
  const Vector<Scalar> residual =
      config.gamma * coupled +
      (Scalar(1) - config.gamma) * (problem.rhs() - am.apply(state.current.primal[last])) +
      am.apply(fresh_primal[last]) - problem.rhs();
  return state.current.dual - config.rho * residual;
}

/// Predictor w-bar^k: x-bar_i = x_i^{k+1},
///   y-bar = y^k - rho (sum_{i<m} A_i x_i^{k+1} + A_m x_m^k - b).
template <typename Scalar>
PrimalDualPoint<Scalar> auxiliary_point(const BlockProblem<Scalar>& problem,
                                        const SolverConfig<Scalar>& config,
                                        const IterationState<Scalar>& state,
                                        const std::vector<Vector<Scalar>>& fresh_primal) {
  if (fresh_primal.size() != problem.num_blocks()) throw DimensionError("fresh primal incomplete");
  const std::size_t last = problem.num_blocks() - 1;
  const Vector<Scalar> coupled = problem.constraint_image(fresh_primal, 0, last) +
                                 problem.last_block().linear_map.apply(state.current.primal[last]);
  PrimalDualPoint<Scalar> bar;
  bar.primal = fresh_primal;
  bar.dual = state.current.dual - config.rho * (coupled - problem.rhs());
  return bar;
}

/// One iteration w^k -> w^{k+1}. Appends w^{k+1} and w-bar^k to `trajectory`
/// when given; evaluates the H-norm step when `metrics` is given.
template <typename Scalar>
std::pair<IterationState<Scalar>, StepReport<Scalar>> step(
    const BlockProblem<Scalar>& problem, const SolverConfig<Scalar>& config,
    const IterationState<Scalar>& state, Trajectory<Scalar>* trajectory = nullptr,
    const MetricOperators<Scalar>* metrics = nullptr) {
  const std::size_t m = problem.num_blocks();
  const long next_k = state.k + 1;

  std::vector<Vector<Scalar>> fresh = first_phase_update(problem, config, state);
  for (std::size_t j = 0; j < fresh.size(); ++j) {
    if (!fresh[j].allFinite()) throw DivergenceError(next_k, detail::component_name(j));
  }
  fresh.push_back(last_block_update(problem, config, state, fresh));
  if (!fresh.back().allFinite()) throw DivergenceError(next_k, detail::component_name(m - 1));
  Vector<Scalar> dual = multiplier_update(problem, config, state, fresh);
  if (!dual.allFinite()) throw DivergenceError(next_k, "y");
  PrimalDualPoint<Scalar> bar = auxiliary_point(problem, config, state, fresh);

  IterationState<Scalar> out;
  out.k = next_k;
  out.previous = state.current;
  out.current.primal = std::move(fresh);
  out.current.dual = std::move(dual);
  out.auxiliary = std::move(bar);

  std::vector<Scalar> norms;
  norms.reserve(m + 1);
  for (std::size_t i = 0; i < m; ++i) norms.push_back((out.current.primal[i] - state.current.primal[i]).norm());
  norms.push_back((out.current.dual - state.current.dual).norm());
  out.first_step_norms = state.first_step_norms.empty() ? norms : state.first_step_norms;

  StepReport<Scalar> report;
  report.k = next_k;
  report.successive_change.resize(norms.size());
  for (std::size_t c = 0; c < norms.size(); ++c) {
    const Scalar denom = out.first_step_norms[c];
    report.successive_change[c] = denom < Scalar(kFirstStepFloor) ? norms[c] : norms[c] / denom;
  }
  report.epsilon = *std::max_element(report.successive_change.begin(), report.successive_change.end());
  report.feasibility_residual = primal_feasibility(problem, out.current);
  report.objective = evaluate_objective(problem, out.current);
  if (metrics) report.h_norm_step = std::sqrt(std::max(Scalar(0),
      metrics->norm_sq(state.current - out.current, WeightedNorm::kH)));
  if (!std::isfinite(static_cast<double>(report.objective))) {
    throw DivergenceError(next_k, "objective");
  }
  if (trajectory) {
    if (trajectory->iterates.empty()) trajectory->iterates.push_back(state.current);
    trajectory->iterates.push_back(out.current);
    trajectory->auxiliaries.push_back(out.auxiliary);
  }
  return {std::move(out), std::move(report)};
}

/// Iterates until the largest relative successive change drops below the
/// tolerance or the iteration cap is reached.
template <typename Scalar>
SolveResult<Scalar> solve(const BlockProblem<Scalar>& problem, const SolverConfig<Scalar>& config,
                          const PrimalDualPoint<Scalar>& start) {
  detail::check_parameters(problem, config);
  if (config.strict_theory_mode) validate_config(problem, config);
  std::optional<MetricOperators<Scalar>> metrics;
  if (config.compute_h_norm) metrics.emplace(problem, config);

  SolveResult<Scalar> result;
  IterationState<Scalar> state = initial_state(problem, start);
  if (config.record_trajectory) result.trajectory.iterates.push_back(start);
  while (state.k < config.max_iterations) {
    auto [next, report] = step(problem, config, state,
                               config.record_trajectory ? &result.trajectory : nullptr,
                               metrics ? &*metrics : nullptr);
    state = std::move(next);
    result.final_epsilon = report.epsilon;
    result.reports.push_back(std::move(report));
    if (result.final_epsilon < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.iterations = state.k;
  result.final_point = std::move(state.current);
  return result;
}

/// One CSV row per iteration:
/// k, feasibility_residual, objective, rel_change_x1..x_m, rel_change_y, h_norm_step.
template <typename Scalar>
void write_trajectory_csv(std::ostream& out, const std::vector<StepReport<Scalar>>& reports,
                          std::size_t num_blocks) {
  out << "k,feasibility_residual,objective";
  for (std::size_t i = 0; i < num_blocks; ++i) out << ",rel_change_x" << (i + 1);
  out << ",rel_change_y,h_norm_step\n";
  std::ostringstream row;
  row.precision(17);
  for (const auto& r : reports) {
    row.str("");
    row << r.k << ',' << r.feasibility_residual << ',' << r.objective;
    for (const auto& c : r.successive_change) row << ',' << c;
    row << ',';
    if (r.h_norm_step) row << *r.h_norm_step;
    row << '\n';
    out << row.str();
  }
}

}  // namespace lgadmm

#endif  // LGADMM_SOLVER_HPP_
