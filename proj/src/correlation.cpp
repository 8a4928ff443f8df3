#include "lgadmm/correlation.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "lgadmm/io.hpp"

namespace lgadmm::correlation {

namespace {

double uniform53(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

void check_square(const Matrix<double>& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + " must be square");
}

// A_i^T A_i = 2I for every block; mismatch beyond this aborts construction.
constexpr double kGramTolerance = 1e-14;

void verify_gram(const LinearMap<double>& map, std::size_t block) {
  std::mt19937_64 engine(0x5eedULL + block);
  std::normal_distribution<double> normal;
  for (int probe = 0; probe < 3; ++probe) {
    Vector<double> x(map.cols());
    for (Index i = 0; i < x.size(); ++i) x(i) = normal(engine);
    const double err = (map.apply_gram(x) - 2.0 * x).norm();
    if (err > kGramTolerance * (1.0 + x.norm())) {
      throw ConfigError("A_" + std::to_string(block + 1) +
                        "^T A_" + std::to_string(block + 1) + " is not 2I");
    }
  }
}

}  // namespace

CalibrationInstance generate_instance(Index n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("calibration instances need n >= 2");
  std::mt19937_64 engine(seed);
  Matrix<double> r(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) r(i, j) = uniform53(engine);
  }
  CalibrationInstance out;
  out.n = n;
  out.seed = seed;
  out.data = (r.transpose() + r) - Matrix<double>::Ones(n, n) + Matrix<double>::Identity(n, n);
  out.upper = Matrix<double>::Constant(n, n, kDefaultBound);
  out.lower = -out.upper;
  return out;
}

Matrix<double> project_psd(const Matrix<double>& a) {
  check_square(a, "PSD projection input");
  if (!a.allFinite()) throw Error("PSD projection input is not finite");
  const Matrix<double> sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(sym);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Vector<double> clamped = eig.eigenvalues().cwiseMax(0.0);
  const Matrix<double>& u = eig.eigenvectors();
  Matrix<double> out = u * clamped.asDiagonal() * u.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix<double> project_box(const Matrix<double>& a, const Matrix<double>& lower,
                           const Matrix<double>& upper) {
  if (a.rows() != lower.rows() || a.cols() != lower.cols() || a.rows() != upper.rows() ||
      a.cols() != upper.cols()) {
    throw DimensionError("box bounds do not conform");
  }
  if ((lower.array() > upper.array()).any()) throw ConfigError("box lower bound exceeds upper");
  return a.cwiseMax(lower).cwiseMin(upper);
}

const std::array<double, 3>& stacked_coefficients(std::size_t block) {
  static const std::array<std::array<double, 3>, 3> kCoefficients{{
      {1.0, 1.0, 0.0},
      {-1.0, 0.0, 1.0},
      {0.0, -1.0, -1.0},
  }};
  if (block >= 3) throw DimensionError("calibration has three blocks");
  return kCoefficients[block];
}

LinearMap<double> stacked_map(Index n, std::size_t block) {
  const auto& c = stacked_coefficients(block);
  return LinearMap<double>::stacked_identity(n * n, {c[0], c[1], c[2]});
}

Vector<double> flatten(const Matrix<double>& mat) {
  return Eigen::Map<const Vector<double>>(mat.data(), mat.size());
}

Matrix<double> unflatten(const Vector<double>& vec, Index n) {
  if (vec.size() != n * n) throw DimensionError("vector is not an n x n matrix");
  return Eigen::Map<const Matrix<double>>(vec.data(), n, n);
}

Vector<double> calibration_block_oracle(const CalibrationInstance& instance, std::size_t block,
                                        const Vector<double>& target, const Vector<double>& center,
                                        double rho, const SymmetricOperator<double>& metric) {
  if (!metric.is_scaled_identity()) {
    throw ConfigError("the closed-form calibration oracle needs P = sigma I; use an iterative "
                      "subproblem solver for general metrics");
  }
  const double sigma = metric.scale();
  if (sigma < 0.0) throw ConfigError("the closed-form calibration oracle needs sigma >= 0");
  const Index n = instance.n;
  const auto& c = stacked_coefficients(block);
  if (target.size() != 3 * n * n || center.size() != n * n) {
    throw DimensionError("calibration oracle inputs do not conform");
  }
  Vector<double> rhs = sigma * center + flatten(instance.data);
  for (int r = 0; r < 3; ++r) {
    if (c[r] != 0.0) rhs += (rho * c[r]) * target.segment(r * n * n, n * n);
  }
  const Matrix<double> free_min = unflatten(rhs / (sigma + 1.0 + 2.0 * rho), n);
  if (block < 2) return flatten(project_psd(free_min));
  return flatten(project_box(free_min, instance.lower, instance.upper));
}

BlockProblem<double> build_problem(std::shared_ptr<const CalibrationInstance> instance) {
  if (!instance) throw ConfigError("missing calibration instance");
  const Index n = instance->n;
  std::vector<BlockSpec<double>> blocks;
  for (std::size_t i = 0; i < 3; ++i) {
    LinearMap<double> map = stacked_map(n, i);
    verify_gram(map, i);
    BlockSpec<double> spec{n * n, map, {}, {}, {}};
    spec.subproblem = [instance, i](const Vector<double>& target, const Vector<double>& center,
                                    double rho, const SymmetricOperator<double>& metric) {
      return calibration_block_oracle(*instance, i, target, center, rho, metric);
    };
    spec.objective = [instance](const Vector<double>& x) {
      return 0.5 * (x - flatten(instance->data)).squaredNorm();
    };
    if (i < 2) {
      spec.projection = [n](const Vector<double>& x) { return flatten(project_psd(unflatten(x, n))); };
    } else {
      spec.projection = [instance](const Vector<double>& x) {
        return flatten(project_box(unflatten(x, instance->n), instance->lower, instance->upper));
      };
    }
    blocks.push_back(std::move(spec));
  }
  return BlockProblem<double>(std::move(blocks), Vector<double>::Zero(3 * n * n));
}

SolverConfig<double> calibration_config(Index n, double rho, double gamma, double sigma) {
  SolverConfig<double> config;
  config.rho = rho;
  config.gamma = gamma;
  for (int i = 0; i < 3; ++i) {
    config.proximal_metrics.push_back(SymmetricOperator<double>::scaled_identity(n * n, sigma));
  }
  return config;
}

void dump_instance(const std::filesystem::path& dir, const CalibrationInstance& instance) {
  std::filesystem::create_directories(dir);
  save_matrix(dir / "data.txt", instance.data);
  save_matrix(dir / "lower.txt", instance.lower);
  save_matrix(dir / "upper.txt", instance.upper);
  nlohmann::ordered_json meta;
  meta["n"] = instance.n;
  meta["seed"] = instance.seed;
  meta["bound"] = instance.upper.size() ? instance.upper(0, 0) : kDefaultBound;
  write_file_atomic(dir / "instance.json", meta.dump(2) + "\n");
}

CalibrationInstance load_instance(const std::filesystem::path& dir) {
  const auto meta = nlohmann::json::parse(read_file(dir / "instance.json"));
  CalibrationInstance out;
  out.n = meta.at("n").get<Index>();
  out.seed = meta.at("seed").get<std::uint64_t>();
  out.data = load_matrix(dir / "data.txt");
  out.lower = load_matrix(dir / "lower.txt");
  out.upper = load_matrix(dir / "upper.txt");
  if (out.data.rows() != out.n || out.data.cols() != out.n || out.lower.rows() != out.n ||
      out.upper.rows() != out.n) {
    throw DimensionError("instance files disagree with n = " + std::to_string(out.n));
  }
  return out;
}

}  // namespace lgadmm::correlation
