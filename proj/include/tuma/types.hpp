#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tuma {

using cd = std::complex<double>;
using Point = Eigen::Vector2d;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Error kinds. Configuration problems are caught at load/validate time,
// domain errors come from numerical kernels called outside their support.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecodeError : std::runtime_error {
  DecodeError(int iteration, const std::string& what)
      : std::runtime_error("AMP iteration " + std::to_string(iteration) + ": " + what),
        iteration(iteration) {}
  int iteration;
};

struct AggregationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tuma
