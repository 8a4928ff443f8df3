#ifndef LGADMM_CORRELATION_HPP_
#define LGADMM_CORRELATION_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>

#include "lgadmm/config.hpp"
#include "lgadmm/problem.hpp"

// Correlation-matrix calibration:
//   min 1/2 sum_i ||X_i - C||_F^2  s.t.  X_1 - X_2 = 0, X_1 - X_3 = 0, X_2 - X_3 = 0,
//   X_1, X_2 PSD, H_L <= X_3 <= H_U,
// with every n x n matrix flattened column-major into an n^2 vector.

namespace lgadmm::correlation {

struct CalibrationInstance {
  Index n = 0;
  Matrix<double> data;   // C, symmetric
  Matrix<double> lower;  // H_L
  Matrix<double> upper;  // H_U
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultBound = 0.1;

/// R has i.i.d. uniform [0, 1) entries drawn row by row from std::mt19937_64
/// (top 53 bits scaled by 2^-53); C = (R^T + R) - ones + I, H_U = 0.1 ones,
/// H_L = -H_U.
CalibrationInstance generate_instance(Index n, std::uint64_t seed);

/// Symmetrizes, then clamps negative eigenvalues to zero.
Matrix<double> project_psd(const Matrix<double>& a);

/// Elementwise min(max(lower, a), upper).
Matrix<double> project_box(const Matrix<double>& a, const Matrix<double>& lower,
                           const Matrix<double>& upper);

/// Coefficients of block i in the three stacked constraint rows.
const std::array<double, 3>& stacked_coefficients(std::size_t block);

LinearMap<double> stacked_map(Index n, std::size_t block);

/// Exact block subproblem for P = sigma I:
///   X = proj_i((sigma center + C + rho A_i^T v) / (sigma + 1 + 2 rho)).
/// Blocks 0 and 1 project onto the PSD cone, block 2 onto the box.
Vector<double> calibration_block_oracle(const CalibrationInstance& instance, std::size_t block,
                                        const Vector<double>& target, const Vector<double>& center,
                                        double rho, const SymmetricOperator<double>& metric);

/// Three-block problem with b = 0. Verifies A_i^T A_i = 2I on random probes,
/// which the closed-form oracle relies on.
BlockProblem<double> build_problem(std::shared_ptr<const CalibrationInstance> instance);

/// rho, gamma and P_i = sigma I for all three blocks.
SolverConfig<double> calibration_config(Index n, double rho, double gamma, double sigma = 0.5);

Vector<double> flatten(const Matrix<double>& mat);
Matrix<double> unflatten(const Vector<double>& vec, Index n);

/// Writes data.txt, lower.txt, upper.txt and instance.json into `dir`.
void dump_instance(const std::filesystem::path& dir, const CalibrationInstance& instance);
CalibrationInstance load_instance(const std::filesystem::path& dir);

}  // namespace lgadmm::correlation

#endif  // LGADMM_CORRELATION_HPP_
