#pragma once

// Independent reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "crosstrack/association.hpp"
#include "crosstrack/core.hpp"

namespace crosstrack::oracle {

inline constexpr double kRasterStep = 0.01;

/// Number of raster sample centres (k + 0.5) * step inside [lo, hi).
inline std::int64_t raster_count(double lo, double hi) {
  if (hi <= lo) return 0;
  const auto first = static_cast<std::int64_t>(std::ceil(lo / kRasterStep - 0.5));
  const auto last = static_cast<std::int64_t>(std::ceil(hi / kRasterStep - 0.5)) - 1;
  return std::max<std::int64_t>(0, last - first + 1);
}

/// IoU of two boxes rasterised on a 0.01 px grid. Pixel membership is
/// separable for axis-aligned boxes, so a sample lies in both boxes iff
/// its x and its y coordinate lie in both intervals; counting per axis is
/// the same as visiting every sample.
inline double raster_iou(const BBox2D& a, const BBox2D& b) {
  const auto ax = raster_count(a.left, a.right);
  const auto ay = raster_count(a.top, a.bottom);
  const auto bx = raster_count(b.left, b.right);
  const auto by = raster_count(b.top, b.bottom);
  const auto ix = raster_count(std::max(a.left, b.left), std::min(a.right, b.right));
  const auto iy = raster_count(std::max(a.top, b.top), std::min(a.bottom, b.bottom));
  const double inter = double(ix) * double(iy);
  const double uni = double(ax) * double(ay) + double(bx) * double(by) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Literal min-pick-and-delete: scan the whole matrix for the smallest
/// admissible entry (first in row-major order on ties), commit it, strike its
/// row and column, repeat.
inline association::Assignment min_pick_and_delete(const Eigen::MatrixXd& cost, double sentinel) {
  association::Assignment out;
  std::vector<bool> row_used(cost.rows(), false);
  std::vector<bool> col_used(cost.cols(), false);
  while (true) {
    int best_r = -1;
    int best_c = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cost.rows(); ++r) {
      if (row_used[r]) continue;
      for (int c = 0; c < cost.cols(); ++c) {
        if (col_used[c]) continue;
        if (cost(r, c) < sentinel && cost(r, c) < best) {
          best = cost(r, c);
          best_r = r;
          best_c = c;
        }
      }
    }
    if (best_r < 0) break;
    out.matches.push_back({best_r, best_c, best});
    row_used[best_r] = true;
    col_used[best_c] = true;
  }
  for (int r = 0; r < cost.rows(); ++r) {
    if (!row_used[r]) out.unmatched_rows.push_back(r);
  }
  for (int c = 0; c < cost.cols(); ++c) {
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  }
  return out;
}

}  // namespace crosstrack::oracle
