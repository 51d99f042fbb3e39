#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace irm {

// (row, column) pairs, sorted by row.
using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Minimum-cost assignment of an N x M cost matrix covering min(N, M) pairs.
// Shortest augmenting path with row/column potentials, O(min^2 * max).
// Throws ValidationError on non-finite costs.
Assignment hungarian_match(const Eigen::MatrixXd& cost);

// Sum of cost(row, col) over the assignment, accumulated in row order.
double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& assignment);

}  // namespace irm
