#ifndef LGADMM_CONFIG_HPP_
#define LGADMM_CONFIG_HPP_

#include <vector>

#include "lgadmm/linear_operator.hpp"

namespace lgadmm {

/// Inputs of the linearized generalized ADMM.
template <typename Scalar>
struct SolverConfig {
  Scalar rho = Scalar(1);
  Scalar gamma = Scalar(1);  // relaxation factor, open interval (0, 2)
  std::vector<SymmetricOperator<Scalar>> proximal_metrics;  // P_1 ... P_m
  long max_iterations = 10000;
  Scalar tolerance = Scalar(1e-6);
  bool strict_theory_mode = false;
  bool record_trajectory = false;
  // Evaluate ||w^k - w^{k+1}||_H after every step.
  bool compute_h_norm = false;
  // Run first-phase block oracles on separate threads.
  bool parallel_first_phase = false;
};

}  // namespace lgadmm

#endif  // LGADMM_CONFIG_HPP_
