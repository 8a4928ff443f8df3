#ifndef LGADMM_LINEAR_OPERATOR_HPP_
#define LGADMM_LINEAR_OPERATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgadmm/core.hpp"

namespace lgadmm {

/// Linear operator R^cols -> R^rows given by its action and adjoint action.
///
/// Maps never need to be materialized. `to_dense()` builds the matrix either
/// from a stored dense realization or by applying the map to unit vectors, so
/// callers should only use it at small dimensions.
template <typename Scalar>
class LinearMap {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;
  using Action = std::function<Vec(const Vec&)>;

  LinearMap(Index rows, Index cols, Action forward, Action adjoint)
      : rows_(rows),
        cols_(cols),
        forward_(std::move(forward)),
        adjoint_(std::move(adjoint)) {
    if (rows <= 0 || cols <= 0) {
      throw DimensionError("linear map dimensions must be positive");
    }
  }

  static LinearMap dense(Mat matrix) {
    auto shared = std::make_shared<const Mat>(std::move(matrix));
    LinearMap map(
        shared->rows(), shared->cols(),
        [shared](const Vec& x) -> Vec { return (*shared) * x; },
        [shared](const Vec& y) -> Vec { return shared->transpose() * y; });
    map.dense_ = shared;
    return map;
  }

  static LinearMap scaled_identity(Index dim, Scalar scale) {
    return stacked_identity(dim, {scale});
  }

  /// Vertical stack of `coefficients[r] * I_dim` blocks: rows = dim * count.
  static LinearMap stacked_identity(Index dim, std::vector<Scalar> coefficients) {
    const auto count = static_cast<Index>(coefficients.size());
    if (count == 0) throw DimensionError("stacked map needs at least one block");
    auto coeffs = std::make_shared<const std::vector<Scalar>>(std::move(coefficients));
    return LinearMap(
        dim * count, dim,
        [coeffs, dim](const Vec& x) -> Vec {
          Vec out(dim * static_cast<Index>(coeffs->size()));
          for (std::size_t r = 0; r < coeffs->size(); ++r) {
            out.segment(static_cast<Index>(r) * dim, dim) = (*coeffs)[r] * x;
          }
          return out;
        },
        [coeffs, dim](const Vec& y) -> Vec {
          Vec out = Vec::Zero(dim);
          for (std::size_t r = 0; r < coeffs->size(); ++r) {
            const Scalar c = (*coeffs)[r];
            if (c != Scalar(0)) out += c * y.segment(static_cast<Index>(r) * dim, dim);
          }
          return out;
        });
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Vec apply(const Vec& x) const {
    if (x.size() != cols_) {
      throw DimensionError("linear map expects input of size " + std::to_string(cols_) +
                           ", got " + std::to_string(x.size()));
    }
    return forward_(x);
  }

  Vec apply_adjoint(const Vec& y) const {
    if (y.size() != rows_) {
      throw DimensionError("linear map adjoint expects input of size " +
                           std::to_string(rows_) + ", got " + std::to_string(y.size()));
    }
    return adjoint_(y);
  }

  // A^T A x
  Vec apply_gram(const Vec& x) const { return apply_adjoint(apply(x)); }

  bool has_dense() const { return dense_ != nullptr; }

  Mat to_dense() const {
    if (dense_) return *dense_;
    Mat out(rows_, cols_);
    Vec e = Vec::Zero(cols_);
    for (Index j = 0; j < cols_; ++j) {
      e(j) = Scalar(1);
      out.col(j) = forward_(e);
      e(j) = Scalar(0);
    }
    return out;
  }

 private:
  Index rows_;
  Index cols_;
  Action forward_;
  Action adjoint_;
  std::shared_ptr<const Mat> dense_;
};

/// Symmetric operator on R^dim, used for the proximal metrics P_i.
template <typename Scalar>
class SymmetricOperator {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;
  using Action = std::function<Vec(const Vec&)>;

  static SymmetricOperator scaled_identity(Index dim, Scalar scale) {
    SymmetricOperator op(dim, [scale](const Vec& x) -> Vec { return scale * x; });
    op.scale_ = scale;
    return op;
  }

  static SymmetricOperator zero(Index dim) { return scaled_identity(dim, Scalar(0)); }

  static SymmetricOperator dense(Mat matrix) {
    if (matrix.rows() != matrix.cols()) {
      throw DimensionError("symmetric operator must be square");
    }
    const Scalar asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    const Scalar size = std::max(Scalar(1), matrix.cwiseAbs().maxCoeff());
    if (asym > Scalar(1e-12) * size) {
      throw ConfigError("proximal metric is not symmetric");
    }
    auto shared = std::make_shared<const Mat>(std::move(matrix));
    SymmetricOperator op(shared->rows(),
                         [shared](const Vec& x) -> Vec { return (*shared) * x; });
    op.dense_ = shared;
    return op;
  }

  /// Matrix-free operator; the caller guarantees symmetry.
  static SymmetricOperator from_action(Index dim, Action action) {
    return SymmetricOperator(dim, std::move(action));
  }

  Index dim() const { return dim_; }

  Vec apply(const Vec& x) const {
    if (x.size() != dim_) {
      throw DimensionError("metric expects size " + std::to_string(dim_) + ", got " +
                           std::to_string(x.size()));
    }
    return action_(x);
  }

  Scalar quadratic_form(const Vec& x) const { return x.dot(apply(x)); }

  bool is_scaled_identity() const { return scale_.has_value(); }
  Scalar scale() const { return scale_.value(); }

  Mat to_dense() const {
    if (dense_) return *dense_;
    if (scale_) return *scale_ * Mat::Identity(dim_, dim_);
    Mat out(dim_, dim_);
    Vec e = Vec::Zero(dim_);
    for (Index j = 0; j < dim_; ++j) {
      e(j) = Scalar(1);
      out.col(j) = action_(e);
      e(j) = Scalar(0);
    }
    return out;
  }

 private:
  SymmetricOperator(Index dim, Action action) : dim_(dim), action_(std::move(action)) {
    if (dim <= 0) throw DimensionError("metric dimension must be positive");
  }

  Index dim_;
  Action action_;
  std::optional<Scalar> scale_;
  std::shared_ptr<const Mat> dense_;
};

template <typename Scalar>
struct PowerIterationOptions {
  Scalar relative_tolerance = Scalar(1e-8);
  int max_iterations = 10000;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// Largest eigenvalue of a positive semidefinite operator by power iteration.
template <typename Scalar>
Scalar power_iteration(Index dim, const std::function<Vector<Scalar>(const Vector<Scalar>&)>& op,
                       const PowerIterationOptions<Scalar>& options = {}) {
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  Vector<Scalar> v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = static_cast<Scalar>(gauss(rng));
  v.normalize();
  Scalar estimate = Scalar(0);
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector<Scalar> w = op(v);
    const Scalar next = v.dot(w);
    const Scalar norm = w.norm();
    if (norm == Scalar(0)) return Scalar(0);
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= options.relative_tolerance * std::abs(next)) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

/// ||A^T A||_2 estimated by power iteration.
template <typename Scalar>
Scalar gram_spectral_norm(const LinearMap<Scalar>& map,
                          const PowerIterationOptions<Scalar>& options = {}) {
  return power_iteration<Scalar>(
      map.cols(), [&map](const Vector<Scalar>& x) { return map.apply_gram(x); }, options);
}

struct SpectrumSummary {
  double min_eigenvalue = 0.0;  // exact when `exact`, otherwise a Rayleigh quotient
  double max_eigenvalue = 0.0;
  bool exact = false;
};

/// Extreme eigenvalues of a symmetric operator. Dense eigendecomposition up to
/// `dense_cap`; above it, shifted power iteration, whose min estimate is a
/// Rayleigh quotient and therefore an upper bound on the true minimum.
template <typename Scalar>
SpectrumSummary symmetric_spectrum(Index dim,
                                   const std::function<Vector<Scalar>(const Vector<Scalar>&)>& op,
                                   Index dense_cap = 1500) {
  SpectrumSummary out;
  if (dim <= dense_cap) {
    Matrix<Scalar> dense(dim, dim);
    Vector<Scalar> e = Vector<Scalar>::Zero(dim);
    for (Index j = 0; j < dim; ++j) {
      e(j) = Scalar(1);
      dense.col(j) = op(e);
      e(j) = Scalar(0);
    }
    dense = (dense + dense.transpose()).eval() / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(dense, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = static_cast<double>(solver.eigenvalues().minCoeff());
    out.max_eigenvalue = static_cast<double>(solver.eigenvalues().maxCoeff());
    out.exact = true;
    return out;
  }
  const Scalar magnitude = std::sqrt(power_iteration<Scalar>(
      dim, [&op](const Vector<Scalar>& x) { return op(op(x)); }));
  const Scalar shift = magnitude * Scalar(1.01) + Scalar(1e-12);
  const Scalar top = power_iteration<Scalar>(
      dim, [&op, shift](const Vector<Scalar>& x) -> Vector<Scalar> { return shift * x - op(x); });
  out.min_eigenvalue = static_cast<double>(shift - top);
  const Scalar bottom = power_iteration<Scalar>(
      dim, [&op, shift](const Vector<Scalar>& x) -> Vector<Scalar> { return shift * x + op(x); });
  out.max_eigenvalue = static_cast<double>(bottom - shift);
  out.exact = false;
  return out;
}

/// Largest relative violation of <Ax, y> = <x, A^T y> over random probes.
template <typename Scalar>
Scalar adjoint_mismatch(const LinearMap<Scalar>& map, int probes = 100, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Scalar worst = Scalar(0);
  for (int p = 0; p < probes; ++p) {
    Vector<Scalar> x(map.cols());
    Vector<Scalar> y(map.rows());
    for (Index i = 0; i < x.size(); ++i) x(i) = static_cast<Scalar>(gauss(rng));
    for (Index i = 0; i < y.size(); ++i) y(i) = static_cast<Scalar>(gauss(rng));
    const Vector<Scalar> ax = map.apply(x);
    const Vector<Scalar> aty = map.apply_adjoint(y);
    const Scalar lhs = ax.dot(y);
    const Scalar rhs = x.dot(aty);
    const Scalar scale = std::max(Scalar(1), ax.norm() * y.norm());
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

/// Smallest singular value of a dense realization; full column rank is
/// assumed by the theory but never enforced.
template <typename Scalar>
Scalar smallest_singular_value(const LinearMap<Scalar>& map) {
  Eigen::JacobiSVD<Matrix<Scalar>> svd(map.to_dense());
  return svd.singularValues().minCoeff();
}

}  // namespace lgadmm

#endif  // LGADMM_LINEAR_OPERATOR_HPP_
