#ifndef LGADMM_METRICS_HPP_
#define LGADMM_METRICS_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgadmm/config.hpp"
#include "lgadmm/problem.hpp"

namespace lgadmm {

enum class WeightedNorm { kH, kN, kG1, kPm };

inline const char* to_string(WeightedNorm which) {
  switch (which) {
    case WeightedNorm::kH: return "H";
    case WeightedNorm::kN: return "N";
    case WeightedNorm::kG1: return "G1";
    case WeightedNorm::kPm: return "Pm";
  }
  return "?";
}

/// Matrix-free actions of the convergence metrics on the (x_1..x_m, y) space.
///
///   G1 = [P_i on the diagonal, -rho A_i^T A_j off it]   (first m-1 blocks)
///   Q  = diag(G1, [rho A_m^T A_m + P_m, (1-g) A_m^T; -A_m, I/rho])
///   M  = diag(I, [I, 0; -rho A_m, g I])
///   H  = diag(G1, [P_m + (rho/g) A_m^T A_m, ((1-g)/g) A_m^T; ((1-g)/g) A_m, I/(g rho)])
///   N  = diag(G1, P_m, ((2-g)/rho) I)
template <typename Scalar>
class MetricOperators {
 public:
  using Vec = Vector<Scalar>;
  using Point = PrimalDualPoint<Scalar>;

  MetricOperators(BlockProblem<Scalar> problem, SolverConfig<Scalar> config)
      : problem_(std::move(problem)), config_(std::move(config)) {
    if (config_.proximal_metrics.size() != problem_.num_blocks()) {
      throw DimensionError("expected " + std::to_string(problem_.num_blocks()) +
                           " proximal metrics, got " +
                           std::to_string(config_.proximal_metrics.size()));
    }
    for (std::size_t i = 0; i < problem_.num_blocks(); ++i) {
      if (config_.proximal_metrics[i].dim() != problem_.block(i).dim) {
        throw DimensionError("proximal metric " + std::to_string(i + 1) +
                             " does not match block dimension");
      }
    }
  }

  const BlockProblem<Scalar>& problem() const { return problem_; }
  const SolverConfig<Scalar>& config() const { return config_; }
  Scalar rho() const { return config_.rho; }
  Scalar gamma() const { return config_.gamma; }
  std::size_t last() const { return problem_.num_blocks() - 1; }

  /// G1 applied to the first m-1 blocks of `primal` (extra blocks ignored).
  std::vector<Vec> apply_g1(const std::vector<Vec>& primal) const {
    const std::size_t first = last();
    const Vec coupled = problem_.constraint_image(primal, 0, first);
    std::vector<Vec> out;
    out.reserve(first);
    for (std::size_t i = 0; i < first; ++i) {
      const auto& map = problem_.block(i).linear_map;
      out.push_back(config_.proximal_metrics[i].apply(primal[i]) +
                    rho() * map.apply_adjoint(map.apply(primal[i]) - coupled));
    }
    return out;
  }

  Scalar g1_norm_sq(const std::vector<Vec>& primal) const {
    const std::size_t first = last();
    Scalar total = Scalar(0);
    for (std::size_t i = 0; i < first; ++i) {
      total += config_.proximal_metrics[i].quadratic_form(primal[i]) +
               rho() * problem_.block(i).linear_map.apply(primal[i]).squaredNorm();
    }
    total -= rho() * problem_.constraint_image(primal, 0, first).squaredNorm();
    return total;
  }

  Point apply_q(const Point& d) const {
    const auto& am = problem_.last_block().linear_map;
    const Vec& xm = d.primal[last()];
    Point out;
    out.primal = apply_g1(d.primal);
    out.primal.push_back(rho() * am.apply_gram(xm) + pm().apply(xm) +
                         (Scalar(1) - gamma()) * am.apply_adjoint(d.dual));
    out.dual = -am.apply(xm) + d.dual / rho();
    return out;
  }

  Point apply_m(const Point& d) const {
    const auto& am = problem_.last_block().linear_map;
    Point out;
    out.primal = d.primal;
    out.dual = -rho() * am.apply(d.primal[last()]) + gamma() * d.dual;
    return out;
  }

  Point apply_h(const Point& d) const {
    const auto& am = problem_.last_block().linear_map;
    const Vec& xm = d.primal[last()];
    const Scalar skew = (Scalar(1) - gamma()) / gamma();
    Point out;
    out.primal = apply_g1(d.primal);
    out.primal.push_back(pm().apply(xm) + (rho() / gamma()) * am.apply_gram(xm) +
                         skew * am.apply_adjoint(d.dual));
    out.dual = skew * am.apply(xm) + d.dual / (gamma() * rho());
    return out;
  }

  Point apply_n(const Point& d) const {
    Point out;
    out.primal = apply_g1(d.primal);
    out.primal.push_back(pm().apply(d.primal[last()]));
    out.dual = ((Scalar(2) - gamma()) / rho()) * d.dual;
    return out;
  }

  Scalar norm_sq(const Point& d, WeightedNorm which) const {
    problem_.check(d);
    switch (which) {
      case WeightedNorm::kH: {
        const auto& am = problem_.last_block().linear_map;
        const Vec& xm = d.primal[last()];
        return g1_norm_sq(d.primal) + pm().quadratic_form(xm) +
               (rho() / gamma()) * am.apply(xm).squaredNorm() +
               Scalar(2) * ((Scalar(1) - gamma()) / gamma()) * am.apply(xm).dot(d.dual) +
               d.dual.squaredNorm() / (gamma() * rho());
      }
      case WeightedNorm::kN:
        return g1_norm_sq(d.primal) + pm().quadratic_form(d.primal[last()]) +
               ((Scalar(2) - gamma()) / rho()) * d.dual.squaredNorm();
      case WeightedNorm::kG1:
        return g1_norm_sq(d.primal);
      case WeightedNorm::kPm:
        return pm().quadratic_form(d.primal[last()]);
    }
    return Scalar(0);
  }

  const SymmetricOperator<Scalar>& pm() const { return config_.proximal_metrics.back(); }

  Index first_phase_dim() const { return problem_.primal_dim() - problem_.last_block().dim; }

 private:
  BlockProblem<Scalar> problem_;
  SolverConfig<Scalar> config_;
};

/// Dense realizations, layout (x_1, ..., x_m, y).
template <typename Scalar>
struct DenseMetrics {
  Matrix<Scalar> g1;
  Matrix<Scalar> q;
  Matrix<Scalar> m_mat;
  Matrix<Scalar> h;
  // Q^T + Q - M^T H M
  Matrix<Scalar> n_mat;
  // diag(G1, P_m, ((2-g)/rho) I)
  Matrix<Scalar> n_closed_form;
};

template <typename Scalar>
DenseMetrics<Scalar> assemble_dense(const MetricOperators<Scalar>& ops) {
  const auto& problem = ops.problem();
  const auto& config = ops.config();
  const std::size_t mb = problem.num_blocks();
  const std::size_t last = mb - 1;
  const Scalar rho = config.rho;
  const Scalar gamma = config.gamma;

  std::vector<Matrix<Scalar>> a;
  std::vector<Index> offsets;
  Index offset = 0;
  for (std::size_t i = 0; i < mb; ++i) {
    a.push_back(problem.block(i).linear_map.to_dense());
    offsets.push_back(offset);
    offset += problem.block(i).dim;
  }
  const Index n_first = offsets[last];
  const Index n_last = problem.block(last).dim;
  const Index ell = problem.constraint_dim();
  const Index total = offset + ell;
  const Index y0 = offset;
  const Index xm0 = offsets[last];

  DenseMetrics<Scalar> d;
  d.g1 = Matrix<Scalar>::Zero(n_first, n_first);
  for (std::size_t i = 0; i < last; ++i) {
    for (std::size_t j = 0; j < last; ++j) {
      const Index ni = problem.block(i).dim;
      const Index nj = problem.block(j).dim;
      if (i == j) {
        d.g1.block(offsets[i], offsets[j], ni, nj) = config.proximal_metrics[i].to_dense();
      } else {
        d.g1.block(offsets[i], offsets[j], ni, nj) = -rho * a[i].transpose() * a[j];
      }
    }
  }
  const Matrix<Scalar> am = a[last];
  const Matrix<Scalar> pm = config.proximal_metrics[last].to_dense();
  const Matrix<Scalar> gram_m = am.transpose() * am;
  const Matrix<Scalar> eye_l = Matrix<Scalar>::Identity(ell, ell);

  d.q = Matrix<Scalar>::Zero(total, total);
  d.q.topLeftCorner(n_first, n_first) = d.g1;
  d.q.block(xm0, xm0, n_last, n_last) = rho * gram_m + pm;
  d.q.block(xm0, y0, n_last, ell) = (Scalar(1) - gamma) * am.transpose();
  d.q.block(y0, xm0, ell, n_last) = -am;
  d.q.block(y0, y0, ell, ell) = eye_l / rho;

  d.m_mat = Matrix<Scalar>::Identity(total, total);
  d.m_mat.block(y0, xm0, ell, n_last) = -rho * am;
  d.m_mat.block(y0, y0, ell, ell) = gamma * eye_l;

  d.h = Matrix<Scalar>::Zero(total, total);
  d.h.topLeftCorner(n_first, n_first) = d.g1;
  d.h.block(xm0, xm0, n_last, n_last) = pm + (rho / gamma) * gram_m;
  d.h.block(xm0, y0, n_last, ell) = ((Scalar(1) - gamma) / gamma) * am.transpose();
  d.h.block(y0, xm0, ell, n_last) = ((Scalar(1) - gamma) / gamma) * am;
  d.h.block(y0, y0, ell, ell) = eye_l / (gamma * rho);

  d.n_mat = d.q.transpose() + d.q - d.m_mat.transpose() * d.h * d.m_mat;

  d.n_closed_form = Matrix<Scalar>::Zero(total, total);
  d.n_closed_form.topLeftCorner(n_first, n_first) = d.g1;
  d.n_closed_form.block(xm0, xm0, n_last, n_last) = pm;
  d.n_closed_form.block(y0, y0, ell, ell) = ((Scalar(2) - gamma) / rho) * eye_l;
  return d;
}

}  // namespace lgadmm

#endif  // LGADMM_METRICS_HPP_
