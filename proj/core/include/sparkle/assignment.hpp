#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace sparkle::assign {

inline constexpr double kForbidden = 1e15;

// Optimal rectangular assignment minimizing total cost (Hungarian
// algorithm with potentials). Entries >= kForbidden/2 are treated as
// disallowed; returned pairs (row, col) exclude them.
std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace sparkle::assign
