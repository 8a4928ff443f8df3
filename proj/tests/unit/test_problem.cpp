#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace fixtures;
using namespace lgadmm;
namespace corr = lgadmm::correlation;

namespace {

Problem tiny_calibration(Index n, std::uint64_t seed = 3) {
  return corr::build_problem(
      std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(n, seed)));
}

Point replicate(const Problem& problem, const Vec& x) {
  Point w = problem.zero_point();
  for (auto& xi : w.primal) xi = x;
  return w;
}

}  // namespace

TEST_CASE("objective vanishes when every copy equals the data") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(4, 11));
  const Problem problem = corr::build_problem(inst);
  CHECK(evaluate_objective(problem, replicate(problem, corr::flatten(inst->data))) == 0.0);
}

TEST_CASE("objective of data plus identity in each copy is three halves of ||I||^2") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(2, 5));
  const Problem problem = corr::build_problem(inst);
  const Vec shifted = corr::flatten(inst->data + Mat::Identity(2, 2));
  CHECK(evaluate_objective(problem, replicate(problem, shifted)) == doctest::Approx(3.0));
}

TEST_CASE("objective sums block values") {
  const Problem problem({scalar_square_block(1.0, 1.0), scalar_square_block(1.0, 1.0)},
                        Vec::Zero(1));
  CHECK(evaluate_objective(problem, scalar_point({1.0, 2.0}, 0.0)) == doctest::Approx(5.0));
}

TEST_CASE("dimension mismatch names the offending block") {
  const Problem problem({scalar_square_block(1.0, 1.0), scalar_square_block(1.0, 1.0)},
                        Vec::Zero(1));
  Point w = scalar_point({1.0, 2.0}, 0.0);
  w.primal[1] = Vec::Zero(3);
  try {
    evaluate_objective(problem, w);
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("block 2") != std::string::npos);
  }
  CHECK_THROWS_AS(primal_feasibility(problem, w), DimensionError);
  CHECK_THROWS_AS(vi_monotone_gap(problem, w, w), DimensionError);
}

TEST_CASE("feasibility of the calibration maps") {
  const Problem problem = tiny_calibration(3);
  std::mt19937_64 rng(1);
  CHECK(primal_feasibility(problem, replicate(problem, gaussian(rng, 9))) == 0.0);

  corr::CalibrationInstance one;
  one.n = 1;
  one.data = Mat::Zero(1, 1);
  one.upper = Mat::Constant(1, 1, 0.1);
  one.lower = -one.upper;
  const Problem scalar = corr::build_problem(std::make_shared<const corr::CalibrationInstance>(one));
  Point w = scalar.zero_point();
  w.primal[0](0) = 1.0;
  CHECK(primal_feasibility(scalar, w) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("feasibility with scalar maps") {
  const Problem problem({scalar_square_block(1.0, 1.0), scalar_square_block(1.0, 1.0)},
                        Vec::Constant(1, 3.0));
  CHECK(primal_feasibility(problem, scalar_point({1.0, 1.0}, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("monotone gap of the affine operator is zero") {
  const Problem scalar({scalar_free_block(1.0), scalar_free_block(1.0)}, Vec::Zero(1));
  const Point w1 = scalar_point({1.0, 0.0}, 2.0);
  const Point w2 = scalar_point({0.0, 1.0}, -1.0);
  CHECK(vi_monotone_gap(scalar, w1, w1) == 0.0);
  CHECK(vi_monotone_gap(scalar, w1, w2) == doctest::Approx(0.0));

  std::mt19937_64 rng(42);
  const Problem problem = random_quadratic_problem(rng, {3, 2, 4}, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const Point a = random_point(problem, rng);
    const Point b = random_point(problem, rng);
    const auto diff = a - b;
    const double scale = 1.0 + dot(diff, diff);
    CHECK(std::abs(vi_monotone_gap(problem, a, b)) <= 1e-12 * scale);
  }
}

TEST_CASE("linearized metric") {
  const auto unit = scalar_free_block(1.0);
  const auto p = make_linearized_metric(unit, 1.0, 2.0);
  CHECK(max_abs(p.to_dense() - Mat::Identity(1, 1)) <= 1e-15);

  const Problem calib = tiny_calibration(3);
  const auto half = make_linearized_metric(calib.block(0), 1.0, 2.5);
  CHECK(max_abs(half.to_dense() - 0.5 * Mat::Identity(9, 9)) <= 1e-8);

  // tau equal to the power-iteration estimate of rho ||A^T A|| is rejected.
  const double threshold = gram_spectral_norm(calib.block(0).linear_map);
  try {
    make_linearized_metric(calib.block(0), 1.0, threshold);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("must exceed") != std::string::npos);
  }
  CHECK_THROWS_AS(make_linearized_metric(unit, 1.0, 1.0), ConfigError);
}

TEST_CASE("power iteration estimates the gram norm") {
  std::mt19937_64 rng(8);
  const Mat a = gaussian(rng, 6, 4);
  const auto map = LinearMap<double>::dense(a);
  Eigen::SelfAdjointEigenSolver<Mat> eig(a.transpose() * a);
  CHECK(gram_spectral_norm(map) == doctest::Approx(eig.eigenvalues().maxCoeff()).epsilon(1e-7));
  CHECK(gram_spectral_norm(corr::stacked_map(4, 2)) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("adjoints are consistent on random probes") {
  std::mt19937_64 rng(9);
  CHECK(adjoint_mismatch(LinearMap<double>::dense(gaussian(rng, 5, 3))) <= 1e-12);
  for (std::size_t i = 0; i < 3; ++i) CHECK(adjoint_mismatch(corr::stacked_map(5, i)) <= 1e-12);
  const Problem problem = random_quadratic_problem(rng, {2, 3}, 4);
  for (const auto& b : problem.blocks()) CHECK(adjoint_mismatch(b.linear_map) <= 1e-12);
}

TEST_CASE("full column rank diagnostic") {
  CHECK(smallest_singular_value(corr::stacked_map(2, 0)) == doctest::Approx(std::sqrt(2.0)));
  Mat rank_deficient(3, 2);
  rank_deficient << 1, 2, 2, 4, 3, 6;
  CHECK(smallest_singular_value(LinearMap<double>::dense(rank_deficient)) <= 1e-12);
}

TEST_CASE("calibration objective is midpoint convex") {
  auto inst = std::make_shared<const corr::CalibrationInstance>(corr::generate_instance(4, 2));
  const Problem problem = corr::build_problem(inst);
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Point a = random_point(problem, rng);
    const Point b = random_point(problem, rng);
    const Point mid = 0.5 * (a + b);
    CHECK(evaluate_objective(problem, mid) <=
          0.5 * (evaluate_objective(problem, a) + evaluate_objective(problem, b)) + 1e-10);
  }
}

TEST_CASE("block problem invariants") {
  CHECK_THROWS_AS(Problem({scalar_free_block(1.0)}, Vec::Zero(1)), DimensionError);
  CHECK_THROWS_AS(Problem({scalar_free_block(1.0), scalar_free_block(1.0)}, Vec::Zero(2)),
                  DimensionError);
  std::mt19937_64 rng(4);
  const Problem problem = random_quadratic_problem(rng, {2, 3, 1}, 4);
  CHECK(problem.primal_dim() == 6);
  CHECK(problem.constraint_dim() == 4);
}

TEST_CASE("stacking round trip") {
  std::mt19937_64 rng(5);
  const Problem problem = random_quadratic_problem(rng, {2, 3}, 2);
  const Point w = random_point(problem, rng);
  const Point back = Point::unstack(w.stacked(), w);
  CHECK(back.stacked() == w.stacked());
  CHECK(w.size() == 7);
}

TEST_CASE("symmetric operators reject asymmetric input") {
  Mat a(2, 2);
  a << 1, 2, 0, 1;
  CHECK_THROWS_AS(Op::dense(a), ConfigError);
}
