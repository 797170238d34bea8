#pragma once

#include "hslam/geometry.hpp"
#include "hslam/scenario.hpp"

#include <vector>

namespace hslam {

enum class FeatureKind { PA, VRP };

const char* kind_name(FeatureKind kind);

struct AgentBelief {
  std::vector<AgentState> particles;
  std::vector<double> weights;

  Point2 mean() const;
  Mat2 covariance() const;
};

/// Particle belief of one PA or VRP. Existence is tracked per anchor because
/// whether a surface is seen depends on the anchor; existence_prob() is the
/// maximum. A PA feature only uses its own anchor's slot.
struct FeatureBelief {
  FeatureKind kind = FeatureKind::VRP;
  std::vector<Point2> particles;
  std::vector<double> weights;
  std::vector<double> existence;  // one entry per anchor
  int pa_index = 0;               // 1-based anchor of a PA feature, 0 for VRPs
  int feature_index = 0;          // 1 for PAs, unique id >= 2 for VRPs
  int born = 0;                   // time slot of creation

  double existence_prob() const;
  Point2 mean() const;
  Mat2 covariance() const;
  /// Trace of the particle covariance.
  double scalar_variance() const;
};

/// Feature with equal weights and the same existence for all `n_anchors` slots
/// (PA features: only slot pa_index-1 is set).
FeatureBelief make_feature(FeatureKind kind, std::vector<Point2> particles, double existence,
                           int n_anchors, int pa_index, int feature_index);

}  // namespace hslam
