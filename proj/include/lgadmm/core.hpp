#ifndef LGADMM_CORE_HPP_
#define LGADMM_CORE_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lgadmm {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by block oracles; carries the index of the failing block.
class OracleError : public Error {
 public:
  OracleError(std::size_t block, const std::string& what)
      : Error("block " + std::to_string(block + 1) + ": " + what),
        block_(block) {}
  std::size_t block() const { return block_; }

 private:
  std::size_t block_;
};

// A non-finite value appeared in an iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(long iteration, const std::string& component)
      : Error("non-finite iterate at iteration " + std::to_string(iteration) +
              " in component " + component),
        iteration_(iteration),
        component_(component) {}
  long iteration() const { return iteration_; }
  const std::string& component() const { return component_; }

 private:
  long iteration_;
  std::string component_;
};

}  // namespace lgadmm

#endif  // LGADMM_CORE_HPP_
