#include "crosstrack/association.hpp"

#include <algorithm>
#include <tuple>

#include "crosstrack/geometry.hpp"

namespace crosstrack::association {

Assignment greedy_match(const Eigen::MatrixXd& cost, double sentinel) {
  const int n_rows = static_cast<int>(cost.rows());
  const int n_cols = static_cast<int>(cost.cols());

  std::vector<Match> candidates;
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      if (cost(r, c) < sentinel) candidates.push_back({r, c, cost(r, c)});
    }
  }
  // Sorting once and scanning is equivalent to repeated min-pick-and-delete:
  // the first surviving candidate is the minimum of the reduced matrix.
  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    return std::tie(a.cost, a.row, a.col) < std::tie(b.cost, b.row, b.col);
  });

  Assignment out;
  std::vector<bool> row_used(n_rows, false);
  std::vector<bool> col_used(n_cols, false);
  for (const auto& m : candidates) {
    if (row_used[m.row] || col_used[m.col]) continue;
    row_used[m.row] = true;
    col_used[m.col] = true;
    out.matches.push_back(m);
  }
  for (int r = 0; r < n_rows; ++r) {
    if (!row_used[r]) out.unmatched_rows.push_back(r);
  }
  for (int c = 0; c < n_cols; ++c) {
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  }
  return out;
}

Assignment greedy_match_iou(std::span<const BBox2D> rows, std::span<const BBox2D> cols,
                            double theta_iou) {
  constexpr double kGated = 2.0;
  Eigen::MatrixXd cost(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double iou = geometry::iou_2d(rows[r], cols[c]);
      cost(r, c) = iou >= theta_iou && iou > 0.0 ? 1.0 - iou : kGated;
    }
  }
  return greedy_match(cost, kGated);
}

}  // namespace crosstrack::association
