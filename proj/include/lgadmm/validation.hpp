#ifndef LGADMM_VALIDATION_HPP_
#define LGADMM_VALIDATION_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lgadmm/config.hpp"
#include "lgadmm/metrics.hpp"
#include "lgadmm/problem.hpp"

namespace lgadmm {

inline constexpr double kEigenvalueZeroThreshold = 1e-10;

struct DefinitenessCheck {
  SpectrumSummary spectrum;
  // Certified lower bound on the smallest eigenvalue, when one is available.
  std::optional<double> lower_bound;
  bool positive_definite = false;
  // True when `positive_definite` is proven either way (exact spectrum, a
  // positive lower bound or a negative Rayleigh quotient).
  bool certified = false;
};

struct ValidationReport {
  bool gamma_in_range = false;
  std::vector<DefinitenessCheck> first_phase_metrics;  // P_1 ... P_{m-1}
  DefinitenessCheck g1;
  DefinitenessCheck last_block;  // P_m + (rho/gamma) A_m^T A_m
  DefinitenessCheck p_m;         // P_m alone, reported separately
  std::vector<std::string> warnings;

  bool theory_preconditions_hold() const {
    return gamma_in_range && g1.positive_definite && last_block.positive_definite;
  }
};

namespace detail {

template <typename Scalar>
DefinitenessCheck check_definiteness(Index dim,
                                     const std::function<Vector<Scalar>(const Vector<Scalar>&)>& op,
                                     std::optional<double> lower_bound, Index dense_cap) {
  DefinitenessCheck out;
  out.spectrum = symmetric_spectrum<Scalar>(dim, op, dense_cap);
  out.lower_bound = lower_bound;
  if (out.spectrum.exact) {
    out.positive_definite = out.spectrum.min_eigenvalue > kEigenvalueZeroThreshold;
    out.certified = true;
  } else if (lower_bound && *lower_bound > kEigenvalueZeroThreshold) {
    out.positive_definite = true;
    out.certified = true;
  } else if (out.spectrum.min_eigenvalue <= kEigenvalueZeroThreshold) {
    out.positive_definite = false;
    out.certified = true;
  }
  return out;
}

template <typename Scalar>
DefinitenessCheck check_metric(const SymmetricOperator<Scalar>& p, Index dense_cap) {
  if (p.is_scaled_identity()) {
    DefinitenessCheck out;
    const double s = static_cast<double>(p.scale());
    out.spectrum = {s, s, true};
    out.lower_bound = s;
    out.positive_definite = s > kEigenvalueZeroThreshold;
    out.certified = true;
    return out;
  }
  return check_definiteness<Scalar>(
      p.dim(), [&p](const Vector<Scalar>& x) { return p.apply(x); }, std::nullopt, dense_cap);
}

inline std::string describe(const char* what, const DefinitenessCheck& c) {
  std::ostringstream msg;
  msg << what << " is not positive definite (min eigenvalue "
      << (c.spectrum.exact ? "" : "estimate ") << c.spectrum.min_eigenvalue << ")";
  return msg.str();
}

}  // namespace detail

/// Checks the parameter requirements of the method: gamma in (0, 2), rho > 0,
/// G1 positive definite and P_m + (rho/gamma) A_m^T A_m positive definite.
///
/// A gamma outside (0, 2) is always an error. The definiteness conditions are
/// errors in strict theory mode and warnings otherwise. When G1 is too large
/// for a dense eigendecomposition, the per-block bound
///   lambda_min(G1) >= min_i [lambda_min(P_i) - rho sum_{j != i, j < m} ||A_i|| ||A_j||]
/// is used to certify positivity, and a Rayleigh quotient to certify failure.
template <typename Scalar>
ValidationReport validate_config(const BlockProblem<Scalar>& problem,
                                 const SolverConfig<Scalar>& config, Index dense_cap = 800) {
  ValidationReport report;
  if (!(config.gamma > Scalar(0) && config.gamma < Scalar(2))) {
    std::ostringstream msg;
    msg << "gamma = " << config.gamma << " is outside the open interval (0, 2)";
    throw ConfigError(msg.str());
  }
  report.gamma_in_range = true;
  if (!(config.rho > Scalar(0))) throw ConfigError("rho must be positive");
  if (!(config.tolerance > Scalar(0))) throw ConfigError("tolerance must be positive");
  if (config.max_iterations <= 0) throw ConfigError("max_iterations must be positive");

  const MetricOperators<Scalar> ops(problem, config);
  const std::size_t m = problem.num_blocks();
  const std::size_t last = m - 1;

  std::vector<double> map_norms;
  for (std::size_t i = 0; i < last; ++i) {
    map_norms.push_back(std::sqrt(static_cast<double>(gram_spectral_norm(problem.block(i).linear_map))));
  }
  std::optional<double> g1_bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < last; ++i) {
    auto check = detail::check_metric(config.proximal_metrics[i], dense_cap);
    if (!check.positive_definite) {
      report.warnings.push_back("P_" + std::to_string(i + 1) + " is not positive definite");
    }
    if (check.spectrum.exact && g1_bound) {
      double coupling = 0.0;
      for (std::size_t j = 0; j < last; ++j) {
        if (j != i) coupling += static_cast<double>(config.rho) * map_norms[i] * map_norms[j];
      }
      g1_bound = std::min(*g1_bound, check.spectrum.min_eigenvalue - coupling);
    } else {
      g1_bound.reset();
    }
    report.first_phase_metrics.push_back(check);
  }

  const Index n_first = ops.first_phase_dim();
  const auto g1_action = [&ops, &problem, last](const Vector<Scalar>& r) -> Vector<Scalar> {
    std::vector<Vector<Scalar>> blocks;
    Index offset = 0;
    for (std::size_t i = 0; i < last; ++i) {
      blocks.push_back(r.segment(offset, problem.block(i).dim));
      offset += problem.block(i).dim;
    }
    const auto out = ops.apply_g1(blocks);
    Vector<Scalar> flat(r.size());
    offset = 0;
    for (const auto& b : out) {
      flat.segment(offset, b.size()) = b;
      offset += b.size();
    }
    return flat;
  };
  report.g1 = detail::check_definiteness<Scalar>(n_first, g1_action, g1_bound, dense_cap);

  const auto& pm = config.proximal_metrics[last];
  const auto& am = problem.last_block().linear_map;
  report.p_m = detail::check_metric(pm, dense_cap);
  std::optional<double> last_bound;
  if (report.p_m.spectrum.exact) last_bound = report.p_m.spectrum.min_eigenvalue;
  const Scalar weight = config.rho / config.gamma;
  report.last_block = detail::check_definiteness<Scalar>(
      pm.dim(),
      [&pm, &am, weight](const Vector<Scalar>& x) -> Vector<Scalar> {
        return pm.apply(x) + weight * am.apply_gram(x);
      },
      last_bound, dense_cap);

  std::vector<std::string> violations;
  if (!report.g1.positive_definite) {
    violations.push_back(report.g1.certified ? detail::describe("G1", report.g1)
                                             : "G1 positive definiteness could not be certified");
  }
  if (!report.last_block.positive_definite) {
    violations.push_back(report.last_block.certified
                             ? detail::describe("P_m + (rho/gamma) A_m^T A_m", report.last_block)
                             : "P_m + (rho/gamma) A_m^T A_m could not be certified");
  }
  if (!report.p_m.positive_definite) {
    report.warnings.push_back(detail::describe("P_m", report.p_m));
  }
  if (config.strict_theory_mode && !violations.empty()) {
    std::string msg = "strict theory mode: ";
    for (std::size_t i = 0; i < violations.size(); ++i) msg += (i ? "; " : "") + violations[i];
    throw ConfigError(msg);
  }
  for (auto& v : violations) report.warnings.push_back(std::move(v));
  return report;
}

}  // namespace lgadmm

#endif  // LGADMM_VALIDATION_HPP_
