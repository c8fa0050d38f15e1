#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

namespace kleaf {

// Ambient dimension never exceeds four (n <= 3), so per-point linear algebra
// uses fixed-capacity storage and stays off the heap.
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

inline constexpr int kMaxAmbientDim = 4;

}  // namespace kleaf
