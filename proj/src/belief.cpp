#include "hslam/belief.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hslam {

namespace {

template <class Get>
Point2 weighted_mean(std::size_t n, const std::vector<double>& w, Get get) {
  Point2 m = Point2::Zero();
  for (std::size_t i = 0; i < n; ++i) m += w[i] * get(i);
  return m;
}

template <class Get>
Mat2 weighted_cov(std::size_t n, const std::vector<double>& w, const Point2& m, Get get) {
  Mat2 c = Mat2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d = get(i) - m;
    c += w[i] * d * d.transpose();
  }
  return c;
}

}  // namespace

const char* kind_name(FeatureKind kind) { return kind == FeatureKind::PA ? "PA" : "VRP"; }

Point2 AgentBelief::mean() const {
  return weighted_mean(particles.size(), weights, [&](std::size_t i) { return particles[i].pos; });
}

Mat2 AgentBelief::covariance() const {
  return weighted_cov(particles.size(), weights, mean(),
                      [&](std::size_t i) { return particles[i].pos; });
}

double FeatureBelief::existence_prob() const {
  return existence.empty() ? 0.0 : *std::max_element(existence.begin(), existence.end());
}

Point2 FeatureBelief::mean() const {
  return weighted_mean(particles.size(), weights, [&](std::size_t i) { return particles[i]; });
}

Mat2 FeatureBelief::covariance() const {
  return weighted_cov(particles.size(), weights, mean(), [&](std::size_t i) { return particles[i]; });
}

double FeatureBelief::scalar_variance() const { return covariance().trace(); }

FeatureBelief make_feature(FeatureKind kind, std::vector<Point2> particles, double existence,
                           int n_anchors, int pa_index, int feature_index) {
  if (particles.empty()) throw std::invalid_argument("make_feature: empty particle set");
  if (n_anchors < 1) throw std::invalid_argument("make_feature: need at least one anchor");
  FeatureBelief f;
  f.kind = kind;
  f.weights.assign(particles.size(), 1.0 / static_cast<double>(particles.size()));
  f.particles = std::move(particles);
  f.pa_index = pa_index;
  f.feature_index = feature_index;
  if (kind == FeatureKind::PA) {
    if (pa_index < 1 || pa_index > n_anchors) throw std::invalid_argument("make_feature: bad pa_index");
    f.existence.assign(n_anchors, 0.0);
    f.existence[pa_index - 1] = existence;
  } else {
    f.existence.assign(n_anchors, existence);
  }
  return f;
}

}  // namespace hslam
