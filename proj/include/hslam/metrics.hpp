#pragma once

#include "hslam/geometry.hpp"

#include <vector>

namespace hslam {

/// Mean over t of |est_t - truth_t|. Throws std::invalid_argument on a length mismatch.
double mae(const std::vector<Point2>& estimates, const std::vector<Point2>& truth);

/// Minimum-cost assignment of rows to columns (rows <= cols). Returns the
/// column chosen for each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

/// OSPA distance with cutoff c and order p; empty vs empty is 0.
double ospa(const std::vector<Point2>& est, const std::vector<Point2>& truth, double cutoff = 10.0,
            double p = 1.0);

}  // namespace hslam
