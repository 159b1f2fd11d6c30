#pragma once

#include <Eigen/Core>

namespace asen {

/// Row-major dense matrix; rows are samples throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

} // namespace asen
