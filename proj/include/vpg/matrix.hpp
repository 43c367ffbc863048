#pragma once

#include <Eigen/Dense>

namespace vpg {

/// Row-major float64 matrix used for features, activations and parameters.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace vpg
