#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

namespace edgelab {

using Scalar = double;
using Index = Eigen::Index;

using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

inline constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

} // namespace edgelab
