#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fixtures.hpp"

using namespace fixtures;
using namespace lgadmm;
namespace corr = lgadmm::correlation;

namespace {

Problem three_free_scalars() {
  return Problem({scalar_free_block(1.0), scalar_free_block(1.0), scalar_free_block(1.0)},
                 Vec::Zero(1));
}

SolverConfig<double> scalar_config(const Problem& problem, double gamma,
                                   std::vector<double> scales) {
  SolverConfig<double> c;
  c.rho = 1.0;
  c.gamma = gamma;
  c.proximal_metrics = scaled_metrics(problem, scales);
  return c;
}

IterationState<double> state_at(const Problem& problem, const Point& w) {
  return initial_state(problem, w);
}

// Solves the KKT system Q_i x_i + q_i - A_i^T y = 0, sum A_i x_i = b.
Point kkt_solution(const Problem& problem, const std::vector<Mat>& hessians,
                   const std::vector<Vec>& linear) {
  const Index n = problem.primal_dim();
  const Index ell = problem.constraint_dim();
  Mat k = Mat::Zero(n + ell, n + ell);
  Vec rhs = Vec::Zero(n + ell);
  Index off = 0;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    const Index d = problem.block(i).dim;
    const Mat a = problem.block(i).linear_map.to_dense();
    k.block(off, off, d, d) = hessians[i];
    k.block(off, n, d, ell) = -a.transpose();
    k.block(n, off, ell, d) = a;
    rhs.segment(off, d) = -linear[i];
    off += d;
  }
  rhs.tail(ell) = problem.rhs();
  const Vec sol = k.fullPivLu().solve(rhs);
  return Point::unstack(sol, problem.zero_point());
}

}  // namespace

TEST_CASE("validate_config: scalar two-block pass") {
  const Problem problem({scalar_free_block(1.0), scalar_free_block(1.0)}, Vec::Zero(1));
  const auto report = validate_config(problem, scalar_config(problem, 1.0, {2.0, 1.0}));
  CHECK(report.theory_preconditions_hold());
  CHECK(report.g1.spectrum.min_eigenvalue == doctest::Approx(2.0));
  CHECK(report.warnings.empty());
}

TEST_CASE("validate_config: benchmark settings leave G1 indefinite") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(3, 1));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(3, 1.0, 1.0, 0.5);
  const auto report = validate_config(problem, config);
  CHECK_FALSE(report.theory_preconditions_hold());
  CHECK(report.g1.spectrum.min_eigenvalue == doctest::Approx(-0.5));
  CHECK(report.g1.spectrum.max_eigenvalue == doctest::Approx(1.5));
  REQUIRE_FALSE(report.warnings.empty());
  CHECK(report.warnings.back().find("G1") != std::string::npos);
  config.strict_theory_mode = true;
  CHECK_THROWS_AS(validate_config(problem, config), ConfigError);
}

TEST_CASE("validate_config: gamma range is always enforced") {
  const Problem problem({scalar_free_block(1.0), scalar_free_block(1.0)}, Vec::Zero(1));
  for (double g : {2.0, 0.0, -0.5, 2.5}) {
    CHECK_THROWS_AS(validate_config(problem, scalar_config(problem, g, {2.0, 1.0})), ConfigError);
  }
  auto c = scalar_config(problem, 1.0, {2.0, 1.0});
  c.rho = 0.0;
  CHECK_THROWS_AS(validate_config(problem, c), ConfigError);
}

TEST_CASE("validate_config: large G1 uses the per-block bound") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(4, 1));
  const Problem problem = corr::build_problem(inst);
  // With dense_cap below the first-phase size, positivity must come from
  // min_i [lambda_min(P_i) - rho sum_{j != i} ||A_i|| ||A_j||] = 4 - 2 = 2.
  const auto report = validate_config(problem, corr::calibration_config(4, 1.0, 1.5, 4.0), 8);
  CHECK(report.g1.positive_definite);
  CHECK(report.g1.certified);
  REQUIRE(report.g1.lower_bound.has_value());
  CHECK(*report.g1.lower_bound == doctest::Approx(2.0).epsilon(1e-6));
  const auto bad = validate_config(problem, corr::calibration_config(4, 1.0, 1.5, 0.5), 8);
  CHECK_FALSE(bad.g1.positive_definite);
  CHECK(bad.g1.certified);
}

TEST_CASE("validate_config reports P_m separately") {
  const Problem problem({scalar_free_block(1.0), scalar_free_block(1.0)}, Vec::Zero(1));
  // P_m = -0.5 is allowed since P_m + (rho/gamma) A^T A = 0.5 > 0.
  const auto report = validate_config(problem, scalar_config(problem, 1.0, {2.0, -0.5}));
  CHECK(report.last_block.positive_definite);
  CHECK_FALSE(report.p_m.positive_definite);
  CHECK(report.theory_preconditions_hold());
}

TEST_CASE("first phase: hand-computed scalar update") {
  const Problem problem = three_free_scalars();
  const auto config = scalar_config(problem, 1.0, {1.0, 1.0, 1.0});
  const auto fresh = first_phase_update(problem, config, state_at(problem, scalar_point({1, 1, 1}, 0)));
  REQUIRE(fresh.size() == 2);
  CHECK(fresh[0](0) == doctest::Approx(-0.5));
  CHECK(fresh[1](0) == doctest::Approx(-0.5));
}

TEST_CASE("first phase: evaluation order and threading do not change any bit") {
  std::mt19937_64 rng(21);
  const Problem problem = random_quadratic_problem(rng, {2, 3, 2, 4}, 3);
  auto config = scalar_config(problem, 1.3, {3.0, 2.0, 4.0, 1.0});
  const auto state = state_at(problem, random_point(problem, rng));
  const auto base = first_phase_update(problem, config, state);
  const std::array<std::size_t, 3> reversed{2, 1, 0};
  const std::array<std::size_t, 3> shuffled{1, 2, 0};
  for (auto order : {std::span<const std::size_t>(reversed), std::span<const std::size_t>(shuffled)}) {
    const auto other = first_phase_update(problem, config, state, order);
    for (std::size_t j = 0; j < base.size(); ++j) CHECK(other[j] == base[j]);
  }
  config.parallel_first_phase = true;
  const auto threaded = first_phase_update(problem, config, state);
  for (std::size_t j = 0; j < base.size(); ++j) CHECK(threaded[j] == base[j]);
}

TEST_CASE("last block: hand-computed scalar update and the gamma = 1 target") {
  const Problem problem = three_free_scalars();
  const auto config = scalar_config(problem, 1.0, {1.0, 1.0, 1.0});
  const auto state = state_at(problem, scalar_point({1, 1, 1}, 0));
  const std::vector<Vec> fresh{Vec::Constant(1, -0.5), Vec::Constant(1, -0.5)};
  CHECK(last_block_update(problem, config, state, fresh)(0) == doctest::Approx(1.0));

  // gamma = 1 target b + y/rho - sum A_i x_i^{k+1}, solved by hand with P = 1:
  // x = (rho v + x^k) / (rho + 1).
  auto state2 = state_at(problem, scalar_point({0.3, -0.2, 0.7}, 0.4));
  const std::vector<Vec> fresh2{Vec::Constant(1, 0.1), Vec::Constant(1, 0.25)};
  const double v = 0.4 - (0.1 + 0.25);
  CHECK(last_block_update(problem, config, state2, fresh2)(0) ==
        doctest::Approx((v + 0.7) / 2.0));
}

TEST_CASE("multiplier update reductions") {
  std::mt19937_64 rng(7);
  const Problem problem = random_quadratic_problem(rng, {2, 2, 3}, 3);
  const auto config = scalar_config(problem, 1.0, {1.0, 1.0, 1.0});
  const Point w = random_point(problem, rng);
  const auto state = state_at(problem, w);
  std::vector<Vec> fresh{gaussian(rng, 2), gaussian(rng, 2), gaussian(rng, 3)};
  const Vec admm = w.dual - config.rho * (problem.constraint_image(fresh) - problem.rhs());
  CHECK(max_abs(multiplier_update(problem, config, state, fresh) - admm) <= 1e-12);

  // Feasible fresh primal: shift the last block so the constraint holds.
  const Mat a3 = problem.block(2).linear_map.to_dense();
  const Vec miss = problem.rhs() - problem.constraint_image(fresh, 0, 2);
  fresh[2] = a3.colPivHouseholderQr().solve(miss);
  REQUIRE((a3 * fresh[2] - miss).norm() <= 1e-10);
  CHECK(max_abs(multiplier_update(problem, config, state, fresh) - w.dual) <= 1e-10);
}

TEST_CASE("multiplier update agrees with the step identity on the scalar example") {
  const Problem problem = three_free_scalars();
  const auto config = scalar_config(problem, 1.5, {1.0, 1.0, 1.0});
  const auto state = state_at(problem, scalar_point({1, 1, 1}, 0.0));
  auto fresh = first_phase_update(problem, config, state);
  fresh.push_back(last_block_update(problem, config, state, fresh));
  const Vec y_next = multiplier_update(problem, config, state, fresh);
  const Point bar = auxiliary_point(problem, config, state, fresh);
  // y^k - y^{k+1} = -rho A_m (x_m^k - x-bar_m^k) + gamma (y^k - y-bar^k)
  const double lhs = 0.0 - y_next(0);
  const double rhs = -(1.0 - bar.primal[2](0)) + 1.5 * (0.0 - bar.dual(0));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  // x_1 = x_2 = -1/2; target_3 = -1.5 (-1) - (-0.5)(0 - 1) = 1, x_3 = (1 + 1)/2 = 1.
  CHECK(fresh[2](0) == doctest::Approx(1.0));
  CHECK(y_next(0) == doctest::Approx(-(1.5 * -1.0 - 0.5 * -1.0 + 1.0)));
}

TEST_CASE("auxiliary point keeps the dual when the predicted residual vanishes") {
  const Problem problem = three_free_scalars();
  const auto config = scalar_config(problem, 1.2, {1.0, 1.0, 1.0});
  const auto state = state_at(problem, scalar_point({0.0, 0.0, 0.5}, 0.3));
  const std::vector<Vec> fresh{Vec::Constant(1, -0.2), Vec::Constant(1, -0.3), Vec::Constant(1, 9)};
  const Point bar = auxiliary_point(problem, config, state, fresh);
  CHECK(bar.dual(0) == doctest::Approx(0.3));
  CHECK(bar.primal[2](0) == 9.0);
}

TEST_CASE("step identities hold on a calibration run") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(5, 4));
  const Problem problem = corr::build_problem(inst);
  const auto config = corr::calibration_config(5, 1.0, 1.7, 0.5);
  const auto metrics = assemble_metrics(problem, config);
  const Mat& m_mat = metrics.dense->m_mat;
  const auto& am = problem.last_block().linear_map;
  auto state = initial_state(problem, problem.zero_point());
  for (int k = 0; k < 100; ++k) {
    const Point before = state.current;
    state = step(problem, config, state).first;
    const Vec wk = before.stacked();
    const Vec predicted = wk - m_mat * (wk - state.auxiliary.stacked());
    const Vec actual = state.current.stacked();
    CHECK((predicted - actual).norm() <= 1e-10 * (1.0 + actual.norm()));
    const Vec dy = before.dual - state.current.dual;
    const Vec rhs = -config.rho * am.apply(before.primal[2] - state.auxiliary.primal[2]) +
                    config.gamma * (before.dual - state.auxiliary.dual);
    CHECK((dy - rhs).norm() <= 1e-10 * (1.0 + dy.norm()));
    for (std::size_t i = 0; i < 3; ++i) CHECK(state.auxiliary.primal[i] == state.current.primal[i]);
  }
}

TEST_CASE("fixed point in, fixed point out") {
  std::mt19937_64 rng(3);
  std::vector<lgadmm::BlockSpec<double>> blocks;
  std::vector<Mat> hessians;
  for (Index d : {2, 3}) {
    hessians.push_back(random_spd(rng, d, 0.5));
    blocks.push_back(quadratic_block<double>(hessians.back(), Vec::Zero(d), gaussian(rng, 2, d)));
  }
  const Problem problem(std::move(blocks), Vec::Zero(2));
  const auto config = scalar_config(problem, 1.4, {1.0, 1.0});
  auto [next, report] = step(problem, config, initial_state(problem, problem.zero_point()));
  CHECK(next.current.stacked().norm() == 0.0);
  CHECK(report.feasibility_residual == 0.0);
  CHECK(report.epsilon == 0.0);

  const auto result = solve(problem, config, problem.zero_point());
  CHECK(result.converged);
  CHECK(result.iterations == 1);
}

TEST_CASE("consistency at a predictor fixed point") {
  std::mt19937_64 rng(12);
  std::vector<lgadmm::BlockSpec<double>> blocks;
  std::vector<Mat> hessians;
  std::vector<Vec> linear;
  for (Index d : {3, 3}) {
    hessians.push_back(random_spd(rng, d, 0.5));
    linear.push_back(gaussian(rng, d));
    blocks.push_back(quadratic_block<double>(hessians.back(), linear.back(), gaussian(rng, 2, d)));
  }
  const Problem problem(std::move(blocks), gaussian(rng, 2));
  const Point star = kkt_solution(problem, hessians, linear);
  const auto config = scalar_config(problem, 1.6, {2.0, 1.0});
  auto state = initial_state(problem, star);
  state = step(problem, config, state).first;
  const double gap = (state.previous.stacked() - state.auxiliary.stacked()).norm();
  REQUIRE(gap <= 1e-12 * (1.0 + state.previous.stacked().norm()));
  CHECK(primal_feasibility(problem, state.current) <= 1e-8);
  for (int k = 0; k < 5; ++k) {
    const Vec before = state.current.stacked();
    state = step(problem, config, state).first;
    CHECK((state.current.stacked() - before).norm() <= 1e-8);
  }
}

TEST_CASE("identical inputs give bitwise identical reports") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(6, 9));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(6, 1.0, 1.9, 0.5);
  config.max_iterations = 40;
  const auto a = solve(problem, config, problem.zero_point());
  const auto b = solve(problem, config, problem.zero_point());
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t k = 0; k < a.reports.size(); ++k) {
    CHECK(a.reports[k].objective == b.reports[k].objective);
    CHECK(a.reports[k].feasibility_residual == b.reports[k].feasibility_residual);
    CHECK(a.reports[k].successive_change == b.reports[k].successive_change);
  }
  CHECK(a.final_point.stacked() == b.final_point.stacked());
}

TEST_CASE("non-finite oracle output is reported as divergence") {
  auto map = LinearMap<double>::dense(Mat::Ones(1, 1));
  lgadmm::BlockSpec<double> broken{1, map, {}, {}, {}};
  broken.subproblem = [](const Vec&, const Vec&, double, const Op&) {
    return Vec::Constant(1, std::numeric_limits<double>::quiet_NaN());
  };
  broken.objective = [](const Vec& x) { return x.squaredNorm(); };
  const Problem problem({broken, scalar_free_block(1.0)}, Vec::Zero(1));
  const auto config = scalar_config(problem, 1.0, {1.0, 1.0});
  try {
    solve(problem, config, problem.zero_point());
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() == 1);
    CHECK(e.component() == "x_1");
  }
}

TEST_CASE("oracle failures carry the block index") {
  auto map = LinearMap<double>::dense(Mat::Ones(1, 1));
  lgadmm::BlockSpec<double> failing{1, map, {}, {}, {}};
  failing.subproblem = [](const Vec&, const Vec&, double, const Op&) -> Vec {
    throw std::runtime_error("inner solver failed");
  };
  failing.objective = [](const Vec&) { return 0.0; };
  const Problem problem({scalar_free_block(1.0), failing}, Vec::Zero(1));
  const auto config = scalar_config(problem, 1.0, {1.0, 1.0});
  try {
    step(problem, config, initial_state(problem, problem.zero_point()));
    FAIL("expected an oracle error");
  } catch (const OracleError& e) {
    CHECK(e.block() == 1);
  }
}

TEST_CASE("H-norm steps are non-increasing under strict settings") {
  std::mt19937_64 rng(30);
  const Problem problem = random_quadratic_problem(rng, {3, 2, 3}, 3);
  double tau = 0.0;
  for (const auto& b : problem.blocks()) tau = std::max(tau, gram_spectral_norm(b.linear_map));
  auto config = scalar_config(problem, 1.7, {3 * tau, 3 * tau, 1.0});
  config.strict_theory_mode = true;
  config.compute_h_norm = true;
  config.max_iterations = 300;
  config.tolerance = 1e-12;
  const auto result = solve(problem, config, problem.zero_point());
  for (std::size_t k = 1; k < result.reports.size(); ++k) {
    const double prev = *result.reports[k - 1].h_norm_step;
    const double cur = *result.reports[k].h_norm_step;
    CHECK(cur * cur <= prev * prev + 1e-10 * (1.0 + prev * prev));
  }
}

TEST_CASE("iteration cap is reported as non-convergence") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(4, 2));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(4, 1.0, 1.0, 0.5);
  config.max_iterations = 3;
  const auto result = solve(problem, config, problem.zero_point());
  CHECK_FALSE(result.converged);
  CHECK(result.iterations == 3);
  CHECK(result.reports.size() == 3);
}

TEST_CASE("calibration n = 50 with gamma = 1.9 converges in the low hundreds") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(50, 1));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(50, 1.0, 1.9, 0.5);
  const auto result = solve(problem, config, problem.zero_point());
  CHECK(result.converged);
  CHECK(result.iterations >= 50);
  CHECK(result.iterations <= 1000);
  CHECK(result.final_epsilon < 1e-6);
}

TEST_CASE("strict mode rejects the benchmark settings before iterating") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(3, 2));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(3, 1.0, 1.0, 0.5);
  config.strict_theory_mode = true;
  CHECK_THROWS_AS(solve(problem, config, problem.zero_point()), ConfigError);
}

TEST_CASE("trajectory CSV layout") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(3, 2));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(3, 1.0, 1.0, 0.5);
  config.max_iterations = 4;
  const auto result = solve(problem, config, problem.zero_point());
  std::ostringstream out;
  write_trajectory_csv(out, result.reports, 3);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "k,feasibility_residual,objective,rel_change_x1,rel_change_x2,rel_change_x3,"
        "rel_change_y,h_norm_step");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("recorded trajectory has one more iterate than predictors") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(3, 2));
  const Problem problem = corr::build_problem(inst);
  auto config = corr::calibration_config(3, 1.0, 1.0, 0.5);
  config.max_iterations = 6;
  config.record_trajectory = true;
  const auto result = solve(problem, config, problem.zero_point());
  CHECK(result.trajectory.iterates.size() == 7);
  CHECK(result.trajectory.steps() == 6);
  CHECK(result.trajectory.iterates.back().stacked() == result.final_point.stacked());
}
