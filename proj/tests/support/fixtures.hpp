#ifndef LGADMM_TESTS_FIXTURES_HPP_
#define LGADMM_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lgadmm/certificates.hpp"
#include "lgadmm/correlation.hpp"
#include "lgadmm/oracles.hpp"

namespace fixtures {

using lgadmm::Index;
using Mat = lgadmm::Matrix<double>;
using Vec = lgadmm::Vector<double>;
using Point = lgadmm::PrimalDualPoint<double>;
using Problem = lgadmm::BlockProblem<double>;
using Op = lgadmm::SymmetricOperator<double>;

inline Mat gaussian(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Mat out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

inline Vec gaussian(std::mt19937_64& rng, Index size) { return gaussian(rng, size, 1).col(0); }

inline Mat random_spd(std::mt19937_64& rng, Index n, double shift) {
  const Mat b = gaussian(rng, n, n);
  return b.transpose() * b / static_cast<double>(n) + shift * Mat::Identity(n, n);
}

/// Strongly convex quadratic blocks with random dense couplings.
inline Problem random_quadratic_problem(std::mt19937_64& rng, const std::vector<Index>& dims,
                                        Index ell) {
  std::vector<lgadmm::BlockSpec<double>> blocks;
  for (Index d : dims) {
    blocks.push_back(lgadmm::quadratic_block<double>(random_spd(rng, d, 0.5), gaussian(rng, d),
                                                     gaussian(rng, ell, d)));
  }
  return Problem(std::move(blocks), gaussian(rng, ell));
}

/// Zero objective over the whole line with A_i = [coefficient].
inline lgadmm::BlockSpec<double> scalar_free_block(double coefficient) {
  return lgadmm::quadratic_block<double>(Mat::Zero(1, 1), Vec::Zero(1),
                                         Mat::Constant(1, 1, coefficient));
}

/// theta(x) = weight x^2 with A = [coefficient].
inline lgadmm::BlockSpec<double> scalar_square_block(double weight, double coefficient) {
  return lgadmm::quadratic_block<double>(Mat::Constant(1, 1, 2.0 * weight), Vec::Zero(1),
                                         Mat::Constant(1, 1, coefficient));
}

inline Point random_point(const Problem& problem, std::mt19937_64& rng) {
  Point w;
  for (const auto& b : problem.blocks()) w.primal.push_back(gaussian(rng, b.dim));
  w.dual = gaussian(rng, problem.constraint_dim());
  return w;
}

inline Point scalar_point(std::initializer_list<double> primal, double dual) {
  Point w;
  for (double x : primal) w.primal.push_back(Vec::Constant(1, x));
  w.dual = Vec::Constant(1, dual);
  return w;
}

inline std::vector<Op> scaled_metrics(const Problem& problem, const std::vector<double>& scales) {
  std::vector<Op> out;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    out.push_back(Op::scaled_identity(problem.block(i).dim, scales[i]));
  }
  return out;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Projected gradient on
///   1/2 ||X - C||^2 + (rho/2) ||A_i X - target||^2 + (sigma/2) ||X - center||^2
/// with a fixed step below 1/L, using only applications of A_i and A_i^T.
inline Vec projected_gradient_subproblem(const lgadmm::correlation::CalibrationInstance& instance,
                                         std::size_t block, const Vec& target, const Vec& center,
                                         double rho, double sigma, double tol = 1e-14,
                                         int max_iterations = 20000) {
  namespace c = lgadmm::correlation;
  const auto map = c::stacked_map(instance.n, block);
  const Vec data = c::flatten(instance.data);
  const double lipschitz = 1.0 + rho * lgadmm::gram_spectral_norm(map) + sigma;
  const double step = 0.6 / lipschitz;
  auto project = [&](const Vec& x) -> Vec {
    const Mat m = c::unflatten(x, instance.n);
    return c::flatten(block < 2 ? c::project_psd(m)
                                : c::project_box(m, instance.lower, instance.upper));
  };
  Vec x = project(center);
  for (int it = 0; it < max_iterations; ++it) {
    const Vec grad = (x - data) + rho * map.apply_adjoint(map.apply(x) - target) +
                     sigma * (x - center);
    const Vec next = project(x - step * grad);
    const double move = (next - x).norm();
    x = next;
    if (move <= tol * (1.0 + x.norm())) break;
  }
  return x;
}

/// Strict calibration setup used by certificate tests.
struct StrictCalibration {
  std::shared_ptr<const lgadmm::correlation::CalibrationInstance> instance;
  Problem problem;
  lgadmm::SolverConfig<double> config;
};

inline StrictCalibration strict_calibration(Index n, std::uint64_t seed, double gamma,
                                            double sigma = 4.0) {
  auto inst = std::make_shared<const lgadmm::correlation::CalibrationInstance>(
      lgadmm::correlation::generate_instance(n, seed));
  auto problem = lgadmm::correlation::build_problem(inst);
  auto config = lgadmm::correlation::calibration_config(n, 1.0, gamma, sigma);
  config.strict_theory_mode = true;
  return {inst, std::move(problem), std::move(config)};
}

inline std::vector<Point> projected_probes(const Problem& problem, std::mt19937_64& rng,
                                           int count) {
  std::vector<Point> out;
  for (int p = 0; p < count; ++p) out.push_back(problem.project(random_point(problem, rng)));
  return out;
}

}  // namespace fixtures

#endif  // LGADMM_TESTS_FIXTURES_HPP_
