#include "hslam/refinement.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

namespace hslam {

namespace {

bool same_class(const FeatureBelief& a, const FeatureBelief& b) {
  if (a.kind != b.kind) return false;
  return a.kind == FeatureKind::VRP || a.pa_index == b.pa_index;
}

struct Candidate {
  double dist;
  std::size_t i;
  std::size_t j;
};

std::vector<Candidate> close_pairs(const std::vector<FeatureBelief>& a, const std::vector<Point2>& ma,
                                   const std::vector<FeatureBelief>& b, const std::vector<Point2>& mb,
                                   double delta_sim, bool same_list) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = same_list ? i + 1 : 0; j < b.size(); ++j) {
      if (!same_class(a[i], b[j])) continue;
      const double d = similarity(ma[i], mb[j]);
      if (d < delta_sim) out.push_back({d, i, j});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& x, const Candidate& y) { return x.dist < y.dist; });
  return out;
}

std::vector<Point2> means(const std::vector<FeatureBelief>& f) {
  std::vector<Point2> m;
  m.reserve(f.size());
  for (const auto& x : f) m.push_back(x.mean());
  return m;
}

}  // namespace

double similarity(const Point2& a, const Point2& b) {
  require_finite(a, "feature mean");
  require_finite(b, "feature mean");
  return (a - b).norm();
}

std::vector<FeatureBelief> refine(const std::vector<FeatureBelief>& legacy,
                                  const std::vector<FeatureBelief>& current, double delta_sim) {
  if (!(delta_sim > 0.0)) throw std::invalid_argument("refine: delta_sim must be positive");
  const auto ml = means(legacy);
  const auto mc = means(current);
  std::vector<int> match_l(legacy.size(), -1), match_c(current.size(), -1);
  for (const auto& c : close_pairs(legacy, ml, current, mc, delta_sim, false)) {
    if (match_l[c.i] >= 0 || match_c[c.j] >= 0) continue;
    match_l[c.i] = static_cast<int>(c.j);
    match_c[c.j] = static_cast<int>(c.i);
  }
  std::vector<FeatureBelief> out;
  for (std::size_t i = 0; i < legacy.size(); ++i) {
    if (match_l[i] < 0) {
      out.push_back(legacy[i]);
      continue;
    }
    const auto& cur = current[match_l[i]];
    out.push_back(cur.scalar_variance() < legacy[i].scalar_variance() ? cur : legacy[i]);
  }
  for (std::size_t j = 0; j < current.size(); ++j) {
    if (match_c[j] < 0) out.push_back(current[j]);
  }
  return out;
}

void refine_step(const std::vector<FeatureBelief>& before, std::vector<FeatureBelief>& features,
                 double delta_sim, double var_slack) {
  if (!(delta_sim > 0.0)) throw std::invalid_argument("refine_step: delta_sim must be positive");
  if (!(var_slack >= 0.0)) throw std::invalid_argument("refine_step: var_slack must be >= 0");
  std::map<std::tuple<int, int, int>, const FeatureBelief*> prev;
  for (const auto& f : before) {
    prev[{static_cast<int>(f.kind), f.pa_index, f.feature_index}] = &f;
  }
  for (auto& f : features) {
    auto it = prev.find({static_cast<int>(f.kind), f.pa_index, f.feature_index});
    if (it == prev.end()) continue;
    const FeatureBelief& old = *it->second;
    if (f.scalar_variance() > old.scalar_variance() + var_slack) {
      f.particles = old.particles;
      f.weights = old.weights;
    }
  }

  const auto m = means(features);
  std::vector<char> removed(features.size(), 0);
  for (const auto& c : close_pairs(features, m, features, m, delta_sim, true)) {
    if (removed[c.i] || removed[c.j]) continue;
    // Keep the older identity (lower born, then lower id) as the survivor.
    std::size_t keep = c.i, drop = c.j;
    if (std::tie(features[c.j].born, features[c.j].feature_index) <
        std::tie(features[c.i].born, features[c.i].feature_index)) {
      std::swap(keep, drop);
    }
    FeatureBelief& k = features[keep];
    const FeatureBelief& d = features[drop];
    if (d.scalar_variance() < k.scalar_variance()) {
      k.particles = d.particles;
      k.weights = d.weights;
    }
    for (std::size_t a = 0; a < k.existence.size() && a < d.existence.size(); ++a) {
      k.existence[a] = std::max(k.existence[a], d.existence[a]);
    }
    removed[drop] = 1;
  }
  std::vector<FeatureBelief> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!removed[i]) out.push_back(std::move(features[i]));
  }
  features = std::move(out);
}

}  // namespace hslam
