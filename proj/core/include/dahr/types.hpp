#pragma once

#include <Eigen/Dense>

namespace dahr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Observations are stored one per row so a shard is a contiguous block.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Regression coefficients; entry 0 is the intercept.
using Coefficients = Eigen::VectorXd;

}  // namespace dahr
