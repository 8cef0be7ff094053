#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace flagsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Quat = Eigen::Quaterniond;

// Configuration file / CLI input problems: unknown keys, bad numbers,
// invariant violations.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken numerical state: degenerate parallel transport, antiparallel edge
// kinks, singular mobility systems. These indicate the time step or the
// input geometry is unusable, not a recoverable condition.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Newton failed to converge within the iteration budget. Carries the last
// residual norm so the caller can decide whether to retry at a smaller dt.
class StepFailure : public std::runtime_error {
  public:
    StepFailure(const std::string& msg, double residual)
        : std::runtime_error(msg), residual_norm(residual) {}
    double residual_norm;
};

}  // namespace flagsim
