#include "irm/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irm/errors.hpp"

namespace irm {
namespace {

// Rows <= columns. Returns, for each row, its assigned column.
std::vector<std::size_t> solve_wide(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based; column 0 is a virtual source. owner[j] is the row holding
  // column j (0 = free).
  std::vector<double> row_pot(n + 1, 0.0);
  std::vector<double> col_pot(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0);
  std::vector<std::size_t> prev(m + 1, 0);

  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::vector<double> slack(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[col0] = true;
      const std::size_t r = owner[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j - 1)) -
                               row_pot[r] - col_pot[j];
        if (reduced < slack[j]) {
          slack[j] = reduced;
          prev[j] = col0;
        }
        if (slack[j] < delta) {
          delta = slack[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          row_pot[owner[j]] += delta;
          col_pot[j] -= delta;
        } else {
          slack[j] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    // Flip the augmenting path back to the source.
    do {
      const std::size_t col1 = prev[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment hungarian_match(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw ValidationError("hungarian_match: cost matrix must be finite");
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;

  if (cost.rows() <= cost.cols()) {
    const auto cols = solve_wide(cost);
    for (std::size_t i = 0; i < cols.size(); ++i) out.emplace_back(i, cols[i]);
  } else {
    const Eigen::MatrixXd transposed = cost.transpose();
    const auto rows = solve_wide(transposed);
    for (std::size_t j = 0; j < rows.size(); ++j) out.emplace_back(rows[j], j);
    std::sort(out.begin(), out.end());
  }
  return out;
}

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& assignment) {
  Assignment sorted = assignment;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const auto& [r, c] : sorted) {
    total += cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return total;
}

}  // namespace irm
