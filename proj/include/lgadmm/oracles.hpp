#ifndef LGADMM_ORACLES_HPP_
#define LGADMM_ORACLES_HPP_

#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "lgadmm/problem.hpp"

namespace lgadmm {

/// Block with theta(x) = 1/2 x^T Q x + q^T x over the whole space and a dense
/// coupling map. The subproblem is solved exactly:
///   (Q + rho A^T A + P) x = rho A^T target + P center - q.
template <typename Scalar>
BlockSpec<Scalar> quadratic_block(Matrix<Scalar> hessian, Vector<Scalar> linear,
                                  Matrix<Scalar> coupling) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != coupling.cols() ||
      linear.size() != hessian.rows()) {
    throw DimensionError("quadratic block data do not conform");
  }
  const Index dim = hessian.rows();
  auto q_mat = std::make_shared<const Matrix<Scalar>>(std::move(hessian));
  auto q_vec = std::make_shared<const Vector<Scalar>>(std::move(linear));
  auto gram = std::make_shared<const Matrix<Scalar>>(coupling.transpose() * coupling);
  LinearMap<Scalar> map = LinearMap<Scalar>::dense(std::move(coupling));

  BlockSpec<Scalar> block{dim, map, {}, {}, {}};
  block.subproblem = [q_mat, q_vec, gram, map](const Vector<Scalar>& target,
                                               const Vector<Scalar>& center, Scalar rho,
                                               const SymmetricOperator<Scalar>& metric) {
    const Matrix<Scalar> p = metric.to_dense();
    const Matrix<Scalar> lhs = *q_mat + rho * *gram + p;
    const Vector<Scalar> rhs = rho * map.apply_adjoint(target) + p * center - *q_vec;
    Vector<Scalar> x = lhs.partialPivLu().solve(rhs);
    if (!x.allFinite()) throw Error("quadratic subproblem is singular");
    return x;
  };
  block.objective = [q_mat, q_vec](const Vector<Scalar>& x) {
    return Scalar(0.5) * x.dot(*q_mat * x) + q_vec->dot(x);
  };
  return block;
}

}  // namespace lgadmm

#endif  // LGADMM_ORACLES_HPP_
