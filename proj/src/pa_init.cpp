#include "hslam/pa_init.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hslam {

namespace {

constexpr double kInitExistence = 0.999;
constexpr double kUninformedExistence = 0.5;
// log-likelihood gap below the best PA mode within which other modes are kept
constexpr double kModeMargin = 2.3;

std::int64_t cell_key(const Point2& p, double cell) {
  const auto ix = static_cast<std::int64_t>(std::floor(p.x() / cell));
  const auto iy = static_cast<std::int64_t>(std::floor(p.y() / cell));
  return (ix << 32) ^ (iy & 0xffffffffLL);
}

Cloud ring(const Point2& center, double radius, int n, double sigma, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, sigma);
  Cloud out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double th = angle(rng);
    const double r = std::abs(radius + noise(rng));
    out.push_back(center + r * Vec2(std::cos(th), std::sin(th)));
  }
  return out;
}

Cloud resample_union(const std::vector<std::vector<CandidateCloud>>& candidates, int n, Rng& rng) {
  Cloud all;
  for (const auto& per_c : candidates) {
    for (const auto& c : per_c) all.insert(all.end(), c.points.begin(), c.points.end());
  }
  if (all.empty()) throw std::invalid_argument("fuse_pa_candidates: no candidate particles");
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  Cloud out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(all[pick(rng)]);
  return out;
}

// Largest matching between candidates and sources (Kuhn). edges holds
// (candidate, source) pairs; sources are shifted by one so -1 (LOS) maps to 0.
int max_matching(std::vector<std::pair<int, int>> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<int> cands;
  int n_src = 0;
  for (auto& e : edges) {
    cands.push_back(e.first);
    e.second += 1;
    n_src = std::max(n_src, e.second + 1);
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  std::vector<int> owner(n_src, -1);
  int matched = 0;
  for (int c : cands) {
    std::vector<char> seen(n_src, 0);
    auto augment = [&](auto&& self, int cand) -> bool {
      for (const auto& [ec, es] : edges) {
        if (ec != cand || seen[es]) continue;
        seen[es] = 1;
        if (owner[es] < 0 || self(self, owner[es])) {
          owner[es] = cand;
          return true;
        }
      }
      return false;
    };
    if (augment(augment, c)) ++matched;
  }
  return matched;
}

}  // namespace

std::vector<Cloud> va_candidates(const Point2& rp, const MeasurementFrame& frame, std::size_t k,
                                 int n_particles, double toa_sigma, Rng& rng) {
  if (k >= frame.per_pa.size() || frame.per_pa[k].empty()) {
    throw std::invalid_argument("va_candidates: no TOA for this anchor");
  }
  std::vector<double> toas = frame.per_pa[k];
  std::sort(toas.begin(), toas.end());
  std::vector<Cloud> out;
  for (std::size_t i = 1; i < toas.size(); ++i) {
    out.push_back(ring(rp, kSpeedOfLight * toas[i], n_particles, toa_sigma, rng));
  }
  return out;
}

Cloud sample_gaussian(const GaussianVrp& g, int n, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(g.cov);
  const Vec2 sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::normal_distribution<double> z(0.0, 1.0);
  Cloud out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 e(sd.x() * z(rng), sd.y() * z(rng));
    out.push_back(g.mean + eig.eigenvectors() * e);
  }
  return out;
}

std::vector<Cloud> pa_candidates(const Cloud& va_cloud, const std::vector<GaussianVrp>& priors,
                                 const Point2& rp, Rng& rng) {
  std::vector<Cloud> out;
  for (const auto& prior : priors) {
    const Cloud vrps = sample_gaussian(prior, static_cast<int>(va_cloud.size()), rng);
    Cloud pa;
    pa.reserve(va_cloud.size());
    for (std::size_t i = 0; i < va_cloud.size(); ++i) {
      if ((vrps[i] - rp).norm() < kDegenerateTol) continue;
      pa.push_back(pa_from_vrp_va(SurfaceFrame{rp, vrps[i]}, va_cloud[i]));
    }
    out.push_back(std::move(pa));
  }
  return out;
}

PaConsensus::PaConsensus(const Point2& rp, std::vector<double> ranges,
                         const std::vector<GaussianVrp>& priors, double toa_sigma,
                         double p_detect, double clutter_intensity)
    : rp_(rp), ranges_(std::move(ranges)) {
  std::sort(ranges_.begin(), ranges_.end());
  if (ranges_.size() > 63) ranges_.resize(63);
  centers_.push_back(rp);
  vars_.push_back(toa_sigma * toa_sigma);
  for (const auto& g : priors) {
    centers_.push_back(g.mean);
    // range spread from the VRP uncertainty, projected on one direction
    vars_.push_back(toa_sigma * toa_sigma + 0.5 * g.cov.trace());
  }
  log_miss_ = std::log(std::max(1.0 - p_detect, 1e-12));
  log_hit_scale_ = std::log(p_detect / std::max(clutter_intensity, 1e-12));
}

double PaConsensus::operator()(const Point2& pa) const {
  // Each predicted path takes a distinct range or is missed. The path count is
  // small, so a depth-first search over gated ranges is cheap.
  const std::size_t n_paths = centers_.size();
  std::vector<std::vector<std::pair<int, double>>> options(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    // A bounce needs pa on rp's side of the surface, whose line is the
    // bisector of rp and the VRP.
    if (i > 0 && (pa - rp_).dot(centers_[i] - rp_) > 0.5 * (centers_[i] - rp_).squaredNorm()) continue;
    const double pred = (pa - centers_[i]).norm();
    const double var = vars_[i];
    const double gate = 5.0 * std::sqrt(var);
    for (std::size_t j = 0; j < ranges_.size(); ++j) {
      const double d = ranges_[j] - pred;
      if (std::abs(d) > gate) continue;
      const double ll = log_hit_scale_ - 0.5 * d * d / var -
                        0.5 * std::log(2.0 * std::numbers::pi * var);
      if (ll > log_miss_) options[i].emplace_back(static_cast<int>(j), ll);
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  auto search = [&](auto&& self, std::size_t i, std::uint64_t used, double acc) -> void {
    if (i == n_paths) {
      best = std::max(best, acc);
      return;
    }
    self(self, i + 1, used, acc + log_miss_);
    for (const auto& [j, ll] : options[i]) {
      const std::uint64_t bit = std::uint64_t{1} << j;
      if (used & bit) continue;
      self(self, i + 1, used | bit, acc + ll);
    }
  };
  search(search, 0, 0, 0.0);
  return best;
}

PaInitResult fuse_pa_candidates(const std::vector<std::vector<CandidateCloud>>& candidates,
                                double grid_cell, int n_particles, Rng& rng,
                                const PaConsensus* consensus) {
  if (!(grid_cell > 0.0)) throw std::invalid_argument("fuse_pa_candidates: grid_cell must be positive");
  if (candidates.size() < 3) {
    return {resample_union(candidates, n_particles, rng), kUninformedExistence, false};
  }
  struct Cell {
    std::vector<std::pair<int, int>> edges;
    std::vector<Point2> members;
  };
  std::unordered_map<std::int64_t, Cell> grid;
  for (std::size_t v = 0; v < candidates.size(); ++v) {
    for (const auto& cloud : candidates[v]) {
      for (const auto& p : cloud.points) {
        Cell& c = grid[cell_key(p, grid_cell)];
        if (c.edges.empty() || c.edges.back() != std::pair<int, int>(static_cast<int>(v), cloud.source)) {
          c.edges.emplace_back(static_cast<int>(v), cloud.source);
        }
        c.members.push_back(p);
      }
    }
  }
  // Hash-map order is not portable; sort for reproducibility.
  std::vector<std::int64_t> keys;
  for (const auto& [key, c] : grid) {
    if (c.edges.size() >= 3) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());

  Cloud pts;
  std::vector<double> logw;
  for (auto key : keys) {
    const Cell& c = grid[key];
    const int occ = max_matching(c.edges);
    if (occ < 3) continue;
    for (const auto& p : c.members) {
      pts.push_back(p);
      logw.push_back(std::log(static_cast<double>(occ)) + (consensus ? (*consensus)(p) : 0.0));
    }
  }
  if (pts.empty()) {
    return {resample_union(candidates, n_particles, rng), kUninformedExistence, false};
  }
  // Competing modes are not averaged into one blob. Modes are grown greedily
  // from the best candidates; a mode is kept if it is within kModeMargin nats
  // of the best, so a real ambiguity survives for the filter to resolve.
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logw[a] > logw[b]; });
  const double lmax = logw[order.front()];
  const double radius = 2.0 * grid_cell;
  std::vector<Point2> modes;
  for (auto i : order) {
    if (logw[i] < lmax - kModeMargin) break;
    bool near = false;
    for (const auto& c : modes) near = near || (pts[i] - c).norm() <= radius;
    if (!near) modes.push_back(pts[i]);
  }
  std::vector<double> w(pts.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (const auto& c : modes) {
      if ((pts[i] - c).norm() <= radius) {
        w[i] = std::exp(logw[i] - lmax);
        break;
      }
    }
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  Cloud out;
  out.reserve(n_particles);
  for (int i = 0; i < n_particles; ++i) out.push_back(pts[pick(rng)]);
  return {std::move(out), kInitExistence, true};
}

Cloud los_ring(const Point2& rp, const MeasurementFrame& frame, std::size_t k, int n_particles,
               double toa_sigma, Rng& rng) {
  if (k >= frame.per_pa.size() || frame.per_pa[k].empty()) {
    throw std::invalid_argument("los_ring: no TOA for this anchor");
  }
  const double tau = *std::min_element(frame.per_pa[k].begin(), frame.per_pa[k].end());
  return ring(rp, kSpeedOfLight * tau, n_particles, toa_sigma, rng);
}

PaInitResult initialize_pa(const Point2& rp, const MeasurementFrame& frame, std::size_t k,
                           const std::vector<GaussianVrp>& priors, const SlamParams& params,
                           Rng& rng) {
  const int n = params.n_particles;
  auto fallback = [&] {
    return PaInitResult{los_ring(rp, frame, k, n, params.toa_sigma, rng), kUninformedExistence, false};
  };
  if (priors.empty() || k >= frame.per_pa.size() || frame.per_pa[k].size() < 3) return fallback();

  // Every range may be the LOS path or a reflection: each gives a ring (LOS
  // hypothesis) and its mirror images through the priors.
  std::vector<double> ranges;
  for (double tau : frame.per_pa[k]) ranges.push_back(kSpeedOfLight * tau);
  std::sort(ranges.begin(), ranges.end());
  std::vector<std::vector<CandidateCloud>> candidates;
  for (double r : ranges) {
    if (r > params.roi_radius) continue;
    const Cloud va = ring(rp, r, n / 4, params.toa_sigma, rng);
    std::vector<CandidateCloud> per;
    per.push_back({va, -1});
    auto mirrored = pa_candidates(va, priors, rp, rng);
    for (std::size_t l = 0; l < mirrored.size(); ++l) {
      per.push_back({std::move(mirrored[l]), static_cast<int>(l)});
    }
    candidates.push_back(std::move(per));
  }
  const PaConsensus consensus(rp, ranges, priors, params.toa_sigma, params.p_detect,
                              params.mu_false * params.false_density());
  PaInitResult res = fuse_pa_candidates(candidates, params.sim_threshold, n, rng, &consensus);
  if (!res.informed) return fallback();
  return res;
}

SlamState initialize_state(const Point2& rp, const MeasurementFrame& frame1,
                           const std::vector<GaussianVrp>& priors, const SlamParams& params,
                           double init_speed_std, std::uint64_t seed) {
  SlamState s;
  s.t = frame1.t;
  s.rp = rp;
  s.n_anchors = static_cast<int>(frame1.per_pa.size());
  s.rng.seed(seed);
  const int n = params.n_particles;

  std::normal_distribution<double> vel(0.0, init_speed_std);
  s.agent.particles.resize(n);
  for (auto& p : s.agent.particles) {
    p.pos = rp;
    p.vel = Vec2(vel(s.rng), vel(s.rng));
  }
  s.agent.weights.assign(n, 1.0 / n);

  for (int k = 0; k < s.n_anchors; ++k) {
    // Per-anchor streams so the result does not depend on processing order.
    Rng rng(derive_seed(seed, {0x5041ULL, static_cast<std::uint64_t>(k)}));
    PaInitResult pa = initialize_pa(rp, frame1, k, priors, params, rng);
    FeatureBelief f = make_feature(FeatureKind::PA, std::move(pa.particles), pa.existence,
                                   s.n_anchors, k + 1, 1);
    f.born = s.t;
    s.features.push_back(std::move(f));
  }
  for (const auto& prior : priors) {
    FeatureBelief f = make_feature(FeatureKind::VRP, sample_gaussian(prior, n, s.rng), kInitExistence,
                                   s.n_anchors, 0, s.next_feature_id++);
    f.born = s.t;
    s.features.push_back(std::move(f));
  }
  return s;
}

}  // namespace hslam
