#ifndef LGADMM_CERTIFICATES_HPP_
#define LGADMM_CERTIFICATES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgadmm/metrics.hpp"
#include "lgadmm/problem.hpp"
#include "lgadmm/solver.hpp"
#include "lgadmm/validation.hpp"

namespace lgadmm {

// Additive slack for trajectory inequalities: kSlackFactor * (1 + scale).
inline constexpr double kSlackFactor = 1e-8;

inline double inequality_slack(double scale) { return kSlackFactor * (1.0 + std::abs(scale)); }

/// Outcome of one certificate over a trajectory. Margins are
/// (right-hand side - left-hand side) of "lhs <= rhs"; a margin passes when it
/// is at least -slack.
struct CertificateReport {
  std::string check;
  long iterations_checked = 0;
  std::vector<double> margins;
  std::vector<double> slacks;
  double worst_margin = std::numeric_limits<double>::infinity();
  long worst_index = -1;
  bool passed = true;
  std::optional<std::string> skipped_reason;
  double rho = 0.0;
  double gamma = 0.0;
  bool strict = false;

  void record(long index, double margin, double slack) {
    margins.push_back(margin);
    slacks.push_back(slack);
    ++iterations_checked;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_index = index;
    }
    if (!(margin >= -slack)) passed = false;
  }
};

template <typename Scalar>
struct MetricMatrices {
  MetricOperators<Scalar> matrix_free;
  std::optional<DenseMetrics<Scalar>> dense;
  ValidationReport validation;

  bool has_dense() const { return dense.has_value(); }

  /// max |(Q^T + Q - M^T H M) - diag(G1, P_m, ((2-g)/rho) I)|.
  Scalar n_form_discrepancy() const {
    require_dense();
    return (dense->n_mat - dense->n_closed_form).cwiseAbs().maxCoeff();
  }

  /// max |Q - H M|.
  Scalar q_factorization_error() const {
    require_dense();
    return (dense->q - dense->h * dense->m_mat).cwiseAbs().maxCoeff();
  }

  Scalar min_eigenvalue(WeightedNorm which) const {
    require_dense();
    Matrix<Scalar> mat;
    switch (which) {
      case WeightedNorm::kH: mat = dense->h; break;
      case WeightedNorm::kN: mat = dense->n_mat; break;
      case WeightedNorm::kG1: mat = dense->g1; break;
      case WeightedNorm::kPm: mat = matrix_free.pm().to_dense(); break;
    }
    mat = (mat + mat.transpose()).eval() / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(mat, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Reason the convergence theory does not apply, if it does not.
  std::optional<std::string> theory_gate() const {
    if (validation.theory_preconditions_hold()) return std::nullopt;
    std::string reason = "theory preconditions do not hold";
    for (const auto& w : validation.warnings) reason += "; " + w;
    return reason;
  }

 private:
  void require_dense() const {
    if (!dense) throw Error("dense metrics not assembled");
  }
};

enum class MetricMode { kDense, kMatrixFree };

/// Builds the metric operators and validates the configuration (warnings
/// only; a gamma outside (0, 2) still throws). Dense forms are assembled in
/// dense mode when the full (n + l) dimension is at most `dense_cap`.
template <typename Scalar>
MetricMatrices<Scalar> assemble_metrics(const BlockProblem<Scalar>& problem,
                                        const SolverConfig<Scalar>& config,
                                        MetricMode mode = MetricMode::kDense,
                                        Index dense_cap = 5000) {
  SolverConfig<Scalar> relaxed = config;
  relaxed.strict_theory_mode = false;
  MetricMatrices<Scalar> out{MetricOperators<Scalar>(problem, config), std::nullopt,
                             validate_config(problem, relaxed)};
  if (mode == MetricMode::kDense) {
    const Index total = problem.primal_dim() + problem.constraint_dim();
    if (total > dense_cap) {
      throw DimensionError("dense metric assembly needs dimension " + std::to_string(total) +
                           " above the cap " + std::to_string(dense_cap));
    }
    out.dense = assemble_dense(out.matrix_free);
  }
  return out;
}

/// v^T W v evaluated without materializing W.
template <typename Scalar>
Scalar weighted_norm_sq(const MetricMatrices<Scalar>& metrics, const PrimalDualPoint<Scalar>& v,
                        WeightedNorm which) {
  return metrics.matrix_free.norm_sq(v, which);
}

template <typename Scalar>
Scalar weighted_norm_sq(const MetricMatrices<Scalar>& metrics, const Vector<Scalar>& stacked,
                        WeightedNorm which) {
  const auto like = metrics.matrix_free.problem().zero_point();
  return weighted_norm_sq(metrics, PrimalDualPoint<Scalar>::unstack(stacked, like), which);
}

/// Same quadratic forms through the dense matrices.
template <typename Scalar>
Scalar dense_weighted_norm_sq(const MetricMatrices<Scalar>& metrics, const Vector<Scalar>& v,
                              WeightedNorm which) {
  if (!metrics.dense) throw Error("dense metrics not assembled");
  const auto& d = *metrics.dense;
  const Index n_first = metrics.matrix_free.first_phase_dim();
  const Index n_last = metrics.matrix_free.problem().last_block().dim;
  switch (which) {
    case WeightedNorm::kH: return v.dot(d.h * v);
    case WeightedNorm::kN: return v.dot(d.n_mat * v);
    case WeightedNorm::kG1: {
      const Vector<Scalar> r = v.head(n_first);
      return r.dot(d.g1 * r);
    }
    case WeightedNorm::kPm: {
      const Vector<Scalar> xm = v.segment(n_first, n_last);
      return xm.dot(metrics.matrix_free.pm().to_dense() * xm);
    }
  }
  return Scalar(0);
}

/// sigma_gamma = min{(2 - gamma)/gamma, 1}, the constant relating the N-norm of
/// w^k - w-bar^k to the H-norm pieces in the nonergodic rate.
template <typename Scalar>
Scalar sigma_gamma(Scalar gamma) {
  if (!(gamma > Scalar(0) && gamma < Scalar(2))) {
    throw ConfigError("sigma_gamma needs gamma in (0, 2)");
  }
  return std::min((Scalar(2) - gamma) / gamma, Scalar(1));
}

namespace detail {

template <typename Scalar>
CertificateReport make_report(const std::string& name, const MetricMatrices<Scalar>& metrics) {
  CertificateReport report;
  report.check = name;
  report.rho = static_cast<double>(metrics.matrix_free.rho());
  report.gamma = static_cast<double>(metrics.matrix_free.gamma());
  report.strict = metrics.matrix_free.config().strict_theory_mode;
  return report;
}

template <typename Scalar>
void require_trajectory(const Trajectory<Scalar>& trajectory) {
  if (trajectory.iterates.empty()) throw Error("certificate needs a recorded trajectory");
  if (trajectory.iterates.size() != trajectory.auxiliaries.size() + 1) {
    throw Error("trajectory must hold one more iterate than auxiliary points");
  }
}

inline double max_abs(std::initializer_list<double> values) {
  double out = 0.0;
  for (double v : values) out = std::max(out, std::abs(v));
  return out;
}

struct ProbeTerms {
  double margin = 0.0;
  double scale = 0.0;
};

template <typename Scalar>
void require_in_set(const BlockProblem<Scalar>& problem, const PrimalDualPoint<Scalar>& probe,
                    double membership_tolerance) {
  problem.check(probe);
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    const Vector<Scalar> proj = problem.block(i).project(probe.primal[i]);
    if (static_cast<double>((proj - probe.primal[i]).norm()) >
        membership_tolerance * (1.0 + static_cast<double>(probe.primal[i].norm()))) {
      throw Error("probe lies outside X_" + std::to_string(i + 1));
    }
  }
}

template <typename Scalar>
ProbeTerms step_inequality_terms(const BlockProblem<Scalar>& problem,
                                 const MetricMatrices<Scalar>& metrics,
                                 const PrimalDualPoint<Scalar>& iterate,
                                 const PrimalDualPoint<Scalar>& auxiliary,
                                 const PrimalDualPoint<Scalar>& probe) {
  const auto diff = probe - auxiliary;
  const double at_probe = static_cast<double>(evaluate_objective(problem, probe));
  const double at_aux = static_cast<double>(evaluate_objective(problem, auxiliary));
  const double coupling = static_cast<double>(dot(diff, vi_operator(problem, auxiliary).as_point()));
  const double metric_term =
      static_cast<double>(dot(diff, metrics.matrix_free.apply_q(iterate - auxiliary)));
  return {at_probe - at_aux + coupling - metric_term,
          max_abs({at_probe, at_aux, coupling, metric_term})};
}

}  // namespace detail

/// ||w^{k+1} - w*||_H^2 <= ||w^k - w*||_H^2 - ||w^k - w-bar^k||_N^2 for all k.
template <typename Scalar>
CertificateReport fejer_check(const MetricMatrices<Scalar>& metrics,
                              const Trajectory<Scalar>& trajectory,
                              const PrimalDualPoint<Scalar>& reference) {
  detail::require_trajectory(trajectory);
  auto report = detail::make_report("fejer_monotonicity", metrics);
  if (auto gate = metrics.theory_gate()) {
    report.skipped_reason = *gate;
    return report;
  }
  const auto& ops = metrics.matrix_free;
  double dist = static_cast<double>(ops.norm_sq(trajectory.iterates[0] - reference, WeightedNorm::kH));
  for (std::size_t k = 0; k < trajectory.steps(); ++k) {
    const double next =
        static_cast<double>(ops.norm_sq(trajectory.iterates[k + 1] - reference, WeightedNorm::kH));
    const double gap = static_cast<double>(
        ops.norm_sq(trajectory.iterates[k] - trajectory.auxiliaries[k], WeightedNorm::kN));
    const double margin = (dist - gap) - next;
    report.record(static_cast<long>(k), margin, inequality_slack(detail::max_abs({dist, gap, next})));
    dist = next;
  }
  return report;
}

/// ||w^{k+1} - w^{k+2}||_H^2 <= ||w^k - w^{k+1}||_H^2 for all k.
template <typename Scalar>
CertificateReport nonergodic_monotonicity_check(const MetricMatrices<Scalar>& metrics,
                                                const Trajectory<Scalar>& trajectory) {
  detail::require_trajectory(trajectory);
  auto report = detail::make_report("nonergodic_monotonicity", metrics);
  if (auto gate = metrics.theory_gate()) {
    report.skipped_reason = *gate;
    return report;
  }
  const auto& ops = metrics.matrix_free;
  const auto& w = trajectory.iterates;
  if (w.size() < 3) return report;
  double prev = static_cast<double>(ops.norm_sq(w[0] - w[1], WeightedNorm::kH));
  for (std::size_t k = 0; k + 2 < w.size(); ++k) {
    const double next = static_cast<double>(ops.norm_sq(w[k + 1] - w[k + 2], WeightedNorm::kH));
    report.record(static_cast<long>(k), prev - next, inequality_slack(detail::max_abs({prev, next})));
    prev = next;
  }
  return report;
}

/// t ||w^t - w^{t+1}||_H^2 <= (1/sigma_gamma) ||w^0 - w*||_H^2 + ||x_m^0 - x_m^1||_{P_m}^2
/// for every t >= 1 in the trajectory. The worst index is the tightest t.
template <typename Scalar>
CertificateReport nonergodic_rate_check(const MetricMatrices<Scalar>& metrics,
                                        const Trajectory<Scalar>& trajectory,
                                        const PrimalDualPoint<Scalar>& reference) {
  detail::require_trajectory(trajectory);
  auto report = detail::make_report("nonergodic_rate", metrics);
  if (auto gate = metrics.theory_gate()) {
    report.skipped_reason = *gate;
    return report;
  }
  const auto& ops = metrics.matrix_free;
  const auto& w = trajectory.iterates;
  if (w.size() < 2) return report;
  const double sigma = static_cast<double>(sigma_gamma(ops.gamma()));
  const double start = static_cast<double>(ops.norm_sq(w[0] - reference, WeightedNorm::kH));
  const double first_move = static_cast<double>(ops.norm_sq(w[0] - w[1], WeightedNorm::kPm));
  const double bound = start / sigma + first_move;
  for (std::size_t t = 1; t + 1 < w.size(); ++t) {
    const double lhs =
        static_cast<double>(t) * static_cast<double>(ops.norm_sq(w[t] - w[t + 1], WeightedNorm::kH));
    report.record(static_cast<long>(t), bound - lhs, inequality_slack(detail::max_abs({lhs, bound})));
  }
  return report;
}

/// Componentwise mean of the given points.
template <typename Scalar>
PrimalDualPoint<Scalar> ergodic_average(const std::vector<PrimalDualPoint<Scalar>>& points) {
  if (points.empty()) throw Error("ergodic average of an empty trajectory");
  PrimalDualPoint<Scalar> sum = points.front();
  for (std::size_t k = 1; k < points.size(); ++k) sum = sum + points[k];
  return (Scalar(1) / static_cast<Scalar>(points.size())) * sum;
}

struct ErgodicCheckOptions {
  // Multiplies the right-hand side; -1 is used by falsification tests.
  double rhs_scale = 1.0;
  double membership_tolerance = 1e-8;
};

/// theta(u_t) - theta(u) + (w_t - w)^T F(w) <= ||w - w^0||_H^2 / (2(t+1)) for
/// each probe w in W, where w_t averages w-bar^0..w-bar^t.
template <typename Scalar>
CertificateReport ergodic_gap_check(const BlockProblem<Scalar>& problem,
                                    const MetricMatrices<Scalar>& metrics,
                                    const PrimalDualPoint<Scalar>& average,
                                    const std::vector<PrimalDualPoint<Scalar>>& probes,
                                    const PrimalDualPoint<Scalar>& start, long t,
                                    const ErgodicCheckOptions& options = {}) {
  auto report = detail::make_report("ergodic_gap", metrics);
  if (auto gate = metrics.theory_gate()) {
    report.skipped_reason = *gate;
    return report;
  }
  const double objective_avg = static_cast<double>(evaluate_objective(problem, average));
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& w = probes[p];
    detail::require_in_set(problem, w, options.membership_tolerance);
    const double objective_probe = static_cast<double>(evaluate_objective(problem, w));
    const double coupling =
        static_cast<double>(dot(average - w, vi_operator(problem, w).as_point()));
    const double lhs = objective_avg - objective_probe + coupling;
    const double rhs = options.rhs_scale *
                       static_cast<double>(metrics.matrix_free.norm_sq(w - start, WeightedNorm::kH)) /
                       (2.0 * static_cast<double>(t + 1));
    report.record(static_cast<long>(p), rhs - lhs,
                  inequality_slack(detail::max_abs({objective_avg, objective_probe, coupling, rhs})));
  }
  return report;
}

/// (x_m^k - x_m^{k+1})^T A_m^T (y^k - y^{k+1})
///     >= 1/2 ||x_m^k - x_m^{k+1}||_{P_m}^2 - 1/2 ||x_m^{k-1} - x_m^k||_{P_m}^2, k >= 1.
template <typename Scalar>
CertificateReport cross_term_check(const Trajectory<Scalar>& trajectory,
                                   const SymmetricOperator<Scalar>& pm,
                                   const LinearMap<Scalar>& am) {
  detail::require_trajectory(trajectory);
  CertificateReport report;
  report.check = "cross_term";
  const auto& w = trajectory.iterates;
  const std::size_t last = w.front().primal.size() - 1;
  for (std::size_t k = 1; k + 1 < w.size(); ++k) {
    const Vector<Scalar> dx = w[k].primal[last] - w[k + 1].primal[last];
    const Vector<Scalar> dx_prev = w[k - 1].primal[last] - w[k].primal[last];
    const Vector<Scalar> dy = w[k].dual - w[k + 1].dual;
    const double lhs = static_cast<double>(am.apply(dx).dot(dy));
    const double now = 0.5 * static_cast<double>(pm.quadratic_form(dx));
    const double before = 0.5 * static_cast<double>(pm.quadratic_form(dx_prev));
    report.record(static_cast<long>(k), lhs - (now - before),
                  inequality_slack(detail::max_abs({lhs, now, before})));
  }
  return report;
}

/// theta(u) - theta(u-bar^k) + (w - w-bar^k)^T F(w-bar^k) - (w - w-bar^k)^T Q (w^k - w-bar^k),
/// which is nonnegative for every w in W.
template <typename Scalar>
Scalar step_inequality_probe(const BlockProblem<Scalar>& problem,
                             const MetricMatrices<Scalar>& metrics,
                             const PrimalDualPoint<Scalar>& iterate,
                             const PrimalDualPoint<Scalar>& auxiliary,
                             const PrimalDualPoint<Scalar>& probe,
                             double membership_tolerance = 1e-8) {
  detail::require_in_set(problem, probe, membership_tolerance);
  return static_cast<Scalar>(
      detail::step_inequality_terms(problem, metrics, iterate, auxiliary, probe).margin);
}

/// Overload reading w^k and w-bar^k from a state produced by `step`.
template <typename Scalar>
Scalar step_inequality_probe(const BlockProblem<Scalar>& problem,
                             const MetricMatrices<Scalar>& metrics,
                             const IterationState<Scalar>& state,
                             const PrimalDualPoint<Scalar>& probe) {
  if (state.k == 0) throw Error("state has no auxiliary point before the first step");
  return step_inequality_probe(problem, metrics, state.previous, state.auxiliary, probe);
}

/// The step inequality at every recorded k for every probe. Index is
/// k * probes.size() + p.
template <typename Scalar>
CertificateReport step_inequality_check(const BlockProblem<Scalar>& problem,
                                        const MetricMatrices<Scalar>& metrics,
                                        const Trajectory<Scalar>& trajectory,
                                        const std::vector<PrimalDualPoint<Scalar>>& probes,
                                        double membership_tolerance = 1e-8) {
  detail::require_trajectory(trajectory);
  auto report = detail::make_report("step_inequality", metrics);
  for (const auto& probe : probes) detail::require_in_set(problem, probe, membership_tolerance);
  for (std::size_t k = 0; k < trajectory.steps(); ++k) {
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const auto terms = detail::step_inequality_terms(problem, metrics, trajectory.iterates[k],
                                                       trajectory.auxiliaries[k], probes[p]);
      report.record(static_cast<long>(k * probes.size() + p), terms.margin,
                    inequality_slack(terms.scale));
    }
  }
  return report;
}

}  // namespace lgadmm

#endif  // LGADMM_CERTIFICATES_HPP_
