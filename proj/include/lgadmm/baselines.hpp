#ifndef LGADMM_BASELINES_HPP_
#define LGADMM_BASELINES_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "lgadmm/config.hpp"
#include "lgadmm/problem.hpp"
#include "lgadmm/solver.hpp"

namespace lgadmm {

enum class TwoBlockVariant { kAdmm, kGadmm, kLgadmmP1, kLgadmmP1P2 };

inline const char* to_string(TwoBlockVariant v) {
  switch (v) {
    case TwoBlockVariant::kAdmm: return "ADMM";
    case TwoBlockVariant::kGadmm: return "GADMM";
    case TwoBlockVariant::kLgadmmP1: return "LGADMM_P1";
    case TwoBlockVariant::kLgadmmP1P2: return "LGADMM_P1P2";
  }
  return "?";
}

/// A literal two-block recursion. `gamma` is ignored by ADMM, `p1` is used by
/// both linearized variants and `p2` only by LGADMM_P1P2.
template <typename Scalar>
struct TwoBlockScheme {
  TwoBlockVariant variant = TwoBlockVariant::kAdmm;
  Scalar rho = Scalar(1);
  Scalar gamma = Scalar(1);
  std::optional<SymmetricOperator<Scalar>> p1;
  std::optional<SymmetricOperator<Scalar>> p2;
};

namespace detail {

template <typename Scalar>
void check_two_block(const BlockProblem<Scalar>& problem, const TwoBlockScheme<Scalar>& scheme) {
  if (problem.num_blocks() != 2) {
    throw DimensionError("two-block scheme needs m = 2, got m = " +
                         std::to_string(problem.num_blocks()));
  }
  if (!(scheme.rho > Scalar(0))) throw ConfigError("rho must be positive");
  const bool relaxed = scheme.variant != TwoBlockVariant::kAdmm;
  if (relaxed && !(scheme.gamma > Scalar(0) && scheme.gamma < Scalar(2))) {
    throw ConfigError("gamma must lie in the open interval (0, 2)");
  }
  const bool needs_p1 = scheme.variant == TwoBlockVariant::kLgadmmP1 ||
                        scheme.variant == TwoBlockVariant::kLgadmmP1P2;
  if (needs_p1 && (!scheme.p1 || scheme.p1->dim() != problem.block(0).dim)) {
    throw ConfigError(std::string(to_string(scheme.variant)) + " needs P1 of block dimension");
  }
  if (scheme.variant == TwoBlockVariant::kLgadmmP1P2 &&
      (!scheme.p2 || scheme.p2->dim() != problem.block(1).dim)) {
    throw ConfigError("LGADMM_P1P2 needs P2 of block dimension");
  }
}

}  // namespace detail

/// One iteration of the selected two-block scheme.
template <typename Scalar>
PrimalDualPoint<Scalar> baseline_step(const BlockProblem<Scalar>& problem,
                                      const TwoBlockScheme<Scalar>& scheme,
                                      const PrimalDualPoint<Scalar>& w) {
  detail::check_two_block(problem, scheme);
  problem.check(w);
  using Vec = Vector<Scalar>;
  using Op = SymmetricOperator<Scalar>;
  const auto& a1 = problem.block(0).linear_map;
  const auto& a2 = problem.block(1).linear_map;
  const Vec& b = problem.rhs();
  const Scalar rho = scheme.rho;

  const Op p1 = scheme.p1 && scheme.variant != TwoBlockVariant::kAdmm &&
                        scheme.variant != TwoBlockVariant::kGadmm
                    ? *scheme.p1
                    : Op::zero(problem.block(0).dim);
  const Op p2 = scheme.variant == TwoBlockVariant::kLgadmmP1P2 ? *scheme.p2
                                                               : Op::zero(problem.block(1).dim);

  const Vec shifted = b + w.dual / rho;
  const Vec x1 = detail::call_oracle(problem, 0, Vec(shifted - a2.apply(w.primal[1])),
                                     w.primal[0], rho, p1);
  const Vec a1x1 = a1.apply(x1);

  PrimalDualPoint<Scalar> out;
  out.primal.resize(2);
  out.primal[0] = x1;
  if (scheme.variant == TwoBlockVariant::kAdmm) {
    out.primal[1] = detail::call_oracle(problem, 1, Vec(shifted - a1x1), w.primal[1], rho, p2);
    out.dual = w.dual - rho * (a1x1 + a2.apply(out.primal[1]) - b);
  } else {
    const Scalar g = scheme.gamma;
    const Vec relaxed = g * a1x1 + (Scalar(1) - g) * (b - a2.apply(w.primal[1]));
    out.primal[1] = detail::call_oracle(problem, 1, Vec(shifted - relaxed), w.primal[1], rho, p2);
    out.dual = w.dual - rho * (relaxed + a2.apply(out.primal[1]) - b);
  }
  return out;
}

struct ReductionPairResult {
  std::string name;
  double max_deviation = 0.0;
  bool passed = true;
};

struct ReductionReport {
  std::vector<ReductionPairResult> pairs;
  double threshold = 1e-10;
  bool passed() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.passed; });
  }
};

/// Runs each claimed-equal pair of recursions from `start` for `iterations`
/// steps and records the largest per-iteration infinity-norm deviation:
///   ADMM                  vs m-block step with gamma = 1, P = 0
///   GADMM(gamma)          vs m-block step with P = 0
///   LGADMM_P1(gamma, P1)  vs m-block step with (P1, 0)
///   LGADMM_P1P2           vs m-block step with (P1, P2)
///   LGADMM_P1             vs LGADMM_P1P2 with P2 = 0
///   GADMM(gamma = 1)      vs ADMM
template <typename Scalar>
ReductionReport reduction_equivalence_suite(const BlockProblem<Scalar>& problem, Scalar rho,
                                            Scalar gamma, const SymmetricOperator<Scalar>& p1,
                                            const SymmetricOperator<Scalar>& p2,
                                            const PrimalDualPoint<Scalar>& start,
                                            int iterations = 50, double threshold = 1e-10) {
  using Op = SymmetricOperator<Scalar>;
  using Scheme = TwoBlockScheme<Scalar>;
  const Op z1 = Op::zero(problem.block(0).dim);
  const Op z2 = Op::zero(problem.block(1).dim);

  auto multi_block = [&](Scalar g, const Op& q1, const Op& q2) {
    SolverConfig<Scalar> c;
    c.rho = rho;
    c.gamma = g;
    c.proximal_metrics = {q1, q2};
    return c;
  };
  auto deviation = [](const PrimalDualPoint<Scalar>& a, const PrimalDualPoint<Scalar>& b) {
    return static_cast<double>((a.stacked() - b.stacked()).cwiseAbs().maxCoeff());
  };

  ReductionReport report;
  report.threshold = threshold;

  auto versus_multi_block = [&](const std::string& name, const Scheme& scheme,
                                const SolverConfig<Scalar>& config) {
    ReductionPairResult r{name};
    PrimalDualPoint<Scalar> w = start;
    IterationState<Scalar> state = initial_state(problem, start);
    for (int k = 0; k < iterations; ++k) {
      w = baseline_step(problem, scheme, w);
      state = step(problem, config, state).first;
      r.max_deviation = std::max(r.max_deviation, deviation(w, state.current));
    }
    r.passed = r.max_deviation <= threshold;
    report.pairs.push_back(r);
  };
  auto versus_scheme = [&](const std::string& name, const Scheme& lhs, const Scheme& rhs) {
    ReductionPairResult r{name};
    PrimalDualPoint<Scalar> a = start;
    PrimalDualPoint<Scalar> b = start;
    for (int k = 0; k < iterations; ++k) {
      a = baseline_step(problem, lhs, a);
      b = baseline_step(problem, rhs, b);
      r.max_deviation = std::max(r.max_deviation, deviation(a, b));
    }
    r.passed = r.max_deviation <= threshold;
    report.pairs.push_back(r);
  };

  const Scheme admm{TwoBlockVariant::kAdmm, rho, Scalar(1), std::nullopt, std::nullopt};
  const Scheme gadmm{TwoBlockVariant::kGadmm, rho, gamma, std::nullopt, std::nullopt};
  const Scheme gadmm_unit{TwoBlockVariant::kGadmm, rho, Scalar(1), std::nullopt, std::nullopt};
  const Scheme lin_p1{TwoBlockVariant::kLgadmmP1, rho, gamma, p1, std::nullopt};
  const Scheme lin_p1_zero_p2{TwoBlockVariant::kLgadmmP1P2, rho, gamma, p1, z2};
  const Scheme lin_full{TwoBlockVariant::kLgadmmP1P2, rho, gamma, p1, p2};

  versus_multi_block("ADMM vs multi-block(gamma=1,P=0)", admm, multi_block(Scalar(1), z1, z2));
  versus_multi_block("GADMM vs multi-block(P=0)", gadmm, multi_block(gamma, z1, z2));
  versus_multi_block("LGADMM_P1 vs multi-block(P2=0)", lin_p1, multi_block(gamma, p1, z2));
  versus_multi_block("LGADMM_P1P2 vs multi-block", lin_full, multi_block(gamma, p1, p2));
  versus_scheme("LGADMM_P1 vs LGADMM_P1P2(P2=0)", lin_p1, lin_p1_zero_p2);
  versus_scheme("GADMM(gamma=1) vs ADMM", gadmm_unit, admm);
  return report;
}

}  // namespace lgadmm

#endif  // LGADMM_BASELINES_HPP_
