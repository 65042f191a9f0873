#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "crosstrack/core.hpp"

namespace crosstrack::association {

struct Match {
  int row = 0;
  int col = 0;
  double cost = 0.0;
  friend bool operator==(const Match&, const Match&) = default;
};

/// One-to-one assignment; matches are listed in commit order.
struct Assignment {
  std::vector<Match> matches;
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Global-minimum greedy: repeatedly commits the smallest remaining entry
/// strictly below `sentinel` and deletes its row and column. Ties go to the
/// lower row, then the lower column.
Assignment greedy_match(const Eigen::MatrixXd& cost, double sentinel);

/// Greedy on 1 - IoU, admitting only pairs with IoU >= theta_iou.
Assignment greedy_match_iou(std::span<const BBox2D> rows, std::span<const BBox2D> cols,
                            double theta_iou);

}  // namespace crosstrack::association
