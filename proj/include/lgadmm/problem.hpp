#ifndef LGADMM_PROBLEM_HPP_
#define LGADMM_PROBLEM_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lgadmm/core.hpp"
#include "lgadmm/linear_operator.hpp"

namespace lgadmm {

/// Solves argmin_{x in X_i} theta_i(x) + (rho/2)||A_i x - target||^2
///                                    + 1/2 ||x - center||_P^2.
template <typename Scalar>
using SubproblemOracle = std::function<Vector<Scalar>(
    const Vector<Scalar>& target, const Vector<Scalar>& center, Scalar rho,
    const SymmetricOperator<Scalar>& metric)>;

template <typename Scalar>
struct BlockSpec {
  Index dim = 0;
  LinearMap<Scalar> linear_map;
  SubproblemOracle<Scalar> subproblem;
  std::function<Scalar(const Vector<Scalar>&)> objective;
  // Nearest point of X_i; empty means X_i is the whole space.
  std::function<Vector<Scalar>(const Vector<Scalar>&)> projection;

  Vector<Scalar> project(const Vector<Scalar>& x) const {
    return projection ? projection(x) : x;
  }
};

/// w = (x_1, ..., x_m, y).
template <typename Scalar>
struct PrimalDualPoint {
  std::vector<Vector<Scalar>> primal;
  Vector<Scalar> dual;

  std::size_t num_blocks() const { return primal.size(); }

  Index size() const {
    Index total = dual.size();
    for (const auto& x : primal) total += x.size();
    return total;
  }

  /// Stacked (x_1; ...; x_m; y).
  Vector<Scalar> stacked() const {
    Vector<Scalar> out(size());
    Index offset = 0;
    for (const auto& x : primal) {
      out.segment(offset, x.size()) = x;
      offset += x.size();
    }
    out.tail(dual.size()) = dual;
    return out;
  }

  /// Inverse of `stacked()` using the block layout of `like`.
  static PrimalDualPoint unstack(const Vector<Scalar>& v, const PrimalDualPoint& like) {
    if (v.size() != like.size()) throw DimensionError("stacked vector does not conform");
    PrimalDualPoint out;
    Index offset = 0;
    for (const auto& x : like.primal) {
      out.primal.push_back(v.segment(offset, x.size()));
      offset += x.size();
    }
    out.dual = v.tail(like.dual.size());
    return out;
  }

  bool all_finite() const {
    for (const auto& x : primal) {
      if (!x.allFinite()) return false;
    }
    return dual.allFinite();
  }
};

template <typename Scalar>
PrimalDualPoint<Scalar> operator-(const PrimalDualPoint<Scalar>& a,
                                  const PrimalDualPoint<Scalar>& b) {
  if (a.primal.size() != b.primal.size()) throw DimensionError("block count mismatch");
  PrimalDualPoint<Scalar> out;
  for (std::size_t i = 0; i < a.primal.size(); ++i) out.primal.push_back(a.primal[i] - b.primal[i]);
  out.dual = a.dual - b.dual;
  return out;
}

template <typename Scalar>
PrimalDualPoint<Scalar> operator+(const PrimalDualPoint<Scalar>& a,
                                  const PrimalDualPoint<Scalar>& b) {
  if (a.primal.size() != b.primal.size()) throw DimensionError("block count mismatch");
  PrimalDualPoint<Scalar> out;
  for (std::size_t i = 0; i < a.primal.size(); ++i) out.primal.push_back(a.primal[i] + b.primal[i]);
  out.dual = a.dual + b.dual;
  return out;
}

template <typename Scalar>
PrimalDualPoint<Scalar> operator*(Scalar s, const PrimalDualPoint<Scalar>& a) {
  PrimalDualPoint<Scalar> out;
  for (const auto& x : a.primal) out.primal.push_back(s * x);
  out.dual = s * a.dual;
  return out;
}

template <typename Scalar>
Scalar dot(const PrimalDualPoint<Scalar>& a, const PrimalDualPoint<Scalar>& b) {
  Scalar total = a.dual.dot(b.dual);
  for (std::size_t i = 0; i < a.primal.size(); ++i) total += a.primal[i].dot(b.primal[i]);
  return total;
}

/// F(w) = (-A_1^T y, ..., -A_m^T y, sum_i A_i x_i - b).
template <typename Scalar>
struct ViOperatorValue {
  std::vector<Vector<Scalar>> block_parts;
  Vector<Scalar> constraint_part;

  PrimalDualPoint<Scalar> as_point() const { return {block_parts, constraint_part}; }
};

/// The m-block program min sum_i theta_i(x_i) s.t. sum_i A_i x_i = b, x_i in X_i.
template <typename Scalar>
class BlockProblem {
 public:
  using Vec = Vector<Scalar>;

  BlockProblem(std::vector<BlockSpec<Scalar>> blocks, Vec rhs)
      : blocks_(std::move(blocks)), rhs_(std::move(rhs)) {
    if (blocks_.size() < 2) throw DimensionError("a block problem needs at least two blocks");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& block = blocks_[i];
      if (block.dim <= 0 || block.linear_map.cols() != block.dim) {
        throw DimensionError("block " + std::to_string(i + 1) +
                             ": linear map columns do not match block dimension");
      }
      if (block.linear_map.rows() != rhs_.size()) {
        throw DimensionError("block " + std::to_string(i + 1) + ": linear map has " +
                             std::to_string(block.linear_map.rows()) + " rows, expected " +
                             std::to_string(rhs_.size()));
      }
      if (!block.subproblem || !block.objective) {
        throw Error("block " + std::to_string(i + 1) + ": missing oracle");
      }
    }
  }

  std::size_t num_blocks() const { return blocks_.size(); }
  const std::vector<BlockSpec<Scalar>>& blocks() const { return blocks_; }
  const BlockSpec<Scalar>& block(std::size_t i) const { return blocks_.at(i); }
  const BlockSpec<Scalar>& last_block() const { return blocks_.back(); }
  const Vec& rhs() const { return rhs_; }
  Index constraint_dim() const { return rhs_.size(); }

  Index primal_dim() const {
    Index total = 0;
    for (const auto& b : blocks_) total += b.dim;
    return total;
  }

  PrimalDualPoint<Scalar> zero_point() const {
    PrimalDualPoint<Scalar> w;
    for (const auto& b : blocks_) w.primal.push_back(Vec::Zero(b.dim));
    w.dual = Vec::Zero(constraint_dim());
    return w;
  }

  /// Throws a DimensionError naming the first offending block.
  void check(const PrimalDualPoint<Scalar>& w) const {
    if (w.primal.size() != blocks_.size()) {
      throw DimensionError("point has " + std::to_string(w.primal.size()) + " blocks, expected " +
                           std::to_string(blocks_.size()));
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (w.primal[i].size() != blocks_[i].dim) {
        throw DimensionError("block " + std::to_string(i + 1) + " has size " +
                             std::to_string(w.primal[i].size()) + ", expected " +
                             std::to_string(blocks_[i].dim));
      }
    }
    if (w.dual.size() != constraint_dim()) {
      throw DimensionError("dual has size " + std::to_string(w.dual.size()) + ", expected " +
                           std::to_string(constraint_dim()));
    }
  }

  // sum_{i in [first, last)} A_i x_i
  Vec constraint_image(const std::vector<Vec>& primal, std::size_t first, std::size_t last) const {
    Vec out = Vec::Zero(constraint_dim());
    for (std::size_t i = first; i < last; ++i) out += blocks_[i].linear_map.apply(primal[i]);
    return out;
  }

  Vec constraint_image(const std::vector<Vec>& primal) const {
    return constraint_image(primal, 0, primal.size());
  }

  PrimalDualPoint<Scalar> project(const PrimalDualPoint<Scalar>& w) const {
    check(w);
    PrimalDualPoint<Scalar> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) out.primal.push_back(blocks_[i].project(w.primal[i]));
    out.dual = w.dual;
    return out;
  }

 private:
  std::vector<BlockSpec<Scalar>> blocks_;
  Vec rhs_;
};

/// theta(u) = sum_i theta_i(x_i).
template <typename Scalar>
Scalar evaluate_objective(const BlockProblem<Scalar>& problem, const PrimalDualPoint<Scalar>& w) {
  problem.check(w);
  Scalar total = Scalar(0);
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) total += problem.block(i).objective(w.primal[i]);
  return total;
}

/// ||sum_i A_i x_i - b||.
template <typename Scalar>
Scalar primal_feasibility(const BlockProblem<Scalar>& problem, const PrimalDualPoint<Scalar>& w) {
  problem.check(w);
  return (problem.constraint_image(w.primal) - problem.rhs()).norm();
}

template <typename Scalar>
ViOperatorValue<Scalar> vi_operator(const BlockProblem<Scalar>& problem,
                                    const PrimalDualPoint<Scalar>& w) {
  problem.check(w);
  ViOperatorValue<Scalar> out;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    out.block_parts.push_back(-problem.block(i).linear_map.apply_adjoint(w.dual));
  }
  out.constraint_part = problem.constraint_image(w.primal) - problem.rhs();
  return out;
}

/// (w1 - w2)^T (F(w1) - F(w2)). The affine part of F is skew, so this is zero
/// up to rounding for every pair.
template <typename Scalar>
Scalar vi_monotone_gap(const BlockProblem<Scalar>& problem, const PrimalDualPoint<Scalar>& w1,
                       const PrimalDualPoint<Scalar>& w2) {
  const auto f1 = vi_operator(problem, w1).as_point();
  const auto f2 = vi_operator(problem, w2).as_point();
  return dot(w1 - w2, f1 - f2);
}

/// P = tau I - rho A^T A, which turns the block subproblem into a plain prox.
/// Requires tau > rho ||A^T A||_2.
template <typename Scalar>
SymmetricOperator<Scalar> make_linearized_metric(const BlockSpec<Scalar>& block, Scalar rho,
                                                 Scalar tau) {
  if (!(rho > Scalar(0))) throw ConfigError("rho must be positive");
  const Scalar threshold = rho * gram_spectral_norm(block.linear_map);
  if (!(tau > threshold)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "tau = " << tau << " must exceed rho*||A^T A||_2 = " << threshold;
    throw ConfigError(msg.str());
  }
  const LinearMap<Scalar> map = block.linear_map;
  return SymmetricOperator<Scalar>::from_action(
      block.dim, [map, rho, tau](const Vector<Scalar>& x) -> Vector<Scalar> {
        return tau * x - rho * map.apply_gram(x);
      });
}

/// Prox centre t for the linearized subproblem: with P = tau I - rho A^T A the
/// subproblem equals argmin theta(x) + (tau/2)||x - t||^2.
template <typename Scalar>
Vector<Scalar> linearized_prox_center(const BlockSpec<Scalar>& block, Scalar rho, Scalar tau,
                                      const Vector<Scalar>& target, const Vector<Scalar>& center) {
  return ((tau * center - rho * block.linear_map.apply_gram(center)) +
          rho * block.linear_map.apply_adjoint(target)) /
         tau;
}

}  // namespace lgadmm

#endif  // LGADMM_PROBLEM_HPP_
