#pragma once

// Feature identity resolution across time and anchors, with variance gating.

#include "hslam/belief.hpp"

#include <vector>

namespace hslam {

/// Euclidean distance between two feature means.
double similarity(const Point2& a, const Point2& b);

/// Greedy nearest-pair matching of legacy against current features (same kind,
/// and same anchor for PAs) under delta_sim. A matched pair keeps the belief
/// with the smaller scalar variance; unmatched features pass through.
std::vector<FeatureBelief> refine(const std::vector<FeatureBelief>& legacy,
                                  const std::vector<FeatureBelief>& current, double delta_sim);

/// Per-step refinement inside the engine:
///  - a feature whose scalar variance grew by more than var_slack during the
///    step keeps its previous particles (its updated existence is kept);
///    var_slack absorbs the spread added on purpose by roughening;
///  - features of the same identity class closer than delta_sim are folded:
///    the lower-variance particles survive, existence is the per-anchor
///    maximum and the older id is kept.
void refine_step(const std::vector<FeatureBelief>& before, std::vector<FeatureBelief>& features,
                 double delta_sim, double var_slack = 0.0);

}  // namespace hslam
