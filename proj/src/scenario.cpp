#include "hslam/scenario.hpp"

#include "hslam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hslam {

namespace {

constexpr double kEps = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Intersection parameters of p + s (q - p) with a + u (b - a).
bool intersect(const Point2& p, const Vec2& dir, const Wall& w, double& s, double& u) {
  const Vec2 e = w.b - w.a;
  const double den = cross(dir, e);
  if (std::abs(den) < 1e-12) return false;
  const Vec2 ap = w.a - p;
  s = cross(ap, e) / den;
  u = cross(ap, dir) / den;
  return true;
}

bool same_wall(const Wall& x, const Wall& y) {
  return (x.a - y.a).norm() < kEps && (x.b - y.b).norm() < kEps;
}

}  // namespace

void Scenario::validate() const {
  if (pas.empty()) throw std::invalid_argument("scenario: at least one PA is required");
  if (waypoints.size() < 2) throw std::invalid_argument("scenario: at least two waypoints are required");
  if (!(step_length > 0.0)) throw std::invalid_argument("scenario: step_length must be positive");
  if (!(sample_period > 0.0)) throw std::invalid_argument("scenario: sample_period must be positive");
  for (const auto& w : walls) {
    require_finite(w.a, "wall endpoint");
    require_finite(w.b, "wall endpoint");
    if ((w.a - w.b).norm() < kDegenerateTol) throw std::invalid_argument("scenario: wall endpoints coincide");
  }
  for (const auto& p : pas) require_finite(p, "pa");
  for (const auto& p : waypoints) require_finite(p, "waypoint");
}

void NoiseModel::validate() const {
  if (!(toa_sigma > 0.0)) throw std::invalid_argument("noise: toa_sigma must be positive");
  if (!(p_detect > 0.0 && p_detect <= 1.0)) throw std::invalid_argument("noise: p_detect must be in (0,1]");
  if (!(mu_false >= 0.0)) throw std::invalid_argument("noise: mu_false must be nonnegative");
  if (!(roi_radius > 0.0)) throw std::invalid_argument("noise: roi_radius must be positive");
}

std::vector<PaFeatures> ground_truth_features(const Scenario& scn) {
  std::vector<PaFeatures> out;
  for (const auto& pa : scn.pas) {
    PaFeatures f{pa, {}, {}};
    for (const auto& w : scn.walls) {
      f.vas.push_back(mirror_across_line(pa, w.a, w.b));
      f.vrps.push_back(mirror_across_line(scn.rp(), w.a, w.b));
    }
    out.push_back(std::move(f));
  }
  return out;
}

bool segment_blocked(const Point2& p, const Point2& q, const std::vector<Wall>& walls, int skip) {
  const Vec2 dir = q - p;
  const double len = dir.norm();
  if (len < kEps) return false;
  const double tol = kEps / len;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    if (static_cast<int>(i) == skip) continue;
    double s = 0.0, u = 0.0;
    if (!intersect(p, dir, walls[i], s, u)) continue;
    if (s > tol && s < 1.0 - tol && u >= -kEps && u <= 1.0 + kEps) return true;
  }
  return false;
}

std::optional<double> visible_single_bounce(const Point2& agent, const Point2& pa,
                                            const Wall& wall, const std::vector<Wall>& walls) {
  const Point2 va = mirror_across_line(pa, wall.a, wall.b);
  const Vec2 dir = va - agent;
  double s = 0.0, u = 0.0;
  if (!intersect(agent, dir, wall, s, u)) return std::nullopt;
  // Reflection point must lie strictly between agent and VA and on the segment.
  if (!(s > kEps && s < 1.0 - kEps) || u < 0.0 || u > 1.0) return std::nullopt;
  const Point2 q = agent + s * dir;
  int skip = -1;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    if (same_wall(walls[i], wall)) skip = static_cast<int>(i);
  }
  if (segment_blocked(agent, q, walls, skip) || segment_blocked(q, pa, walls, skip)) {
    return std::nullopt;
  }
  return dir.norm();
}

std::vector<Path> visible_paths(const Scenario& scn, const Point2& agent, std::size_t k) {
  const Point2& pa = scn.pas.at(k);
  std::vector<Path> paths{{-1, (agent - pa).norm()}};
  for (std::size_t l = 0; l < scn.walls.size(); ++l) {
    if (auto len = visible_single_bounce(agent, pa, scn.walls[l], scn.walls)) {
      paths.push_back({static_cast<int>(l), *len});
    }
  }
  return paths;
}

std::vector<AgentState> generate_trajectory(const Scenario& scn) {
  if (scn.waypoints.size() < 2) throw std::invalid_argument("trajectory: need at least two waypoints");
  if (!(scn.step_length > 0.0)) throw std::invalid_argument("trajectory: step_length must be positive");
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < scn.waypoints.size(); ++i) {
    const double seg = (scn.waypoints[i] - scn.waypoints[i - 1]).norm();
    if (seg < kDegenerateTol) {
      std::ostringstream os;
      os << "trajectory: waypoints " << i - 1 << " and " << i << " coincide";
      throw std::invalid_argument(os.str());
    }
    cum.push_back(cum.back() + seg);
  }
  const double total = cum.back();
  const auto n = static_cast<std::size_t>(std::floor(total / scn.step_length + 1e-9));

  std::vector<Point2> pos;
  std::size_t seg = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = std::min(i * scn.step_length, total);
    while (seg + 2 < cum.size() && s > cum[seg + 1]) ++seg;
    const double frac = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
    pos.push_back(scn.waypoints[seg] + frac * (scn.waypoints[seg + 1] - scn.waypoints[seg]));
  }
  // the path always ends on the last waypoint, even after a short final step
  if ((pos.back() - scn.waypoints.back()).norm() > 1e-9) pos.push_back(scn.waypoints.back());

  std::vector<AgentState> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    out[i].pos = pos[i];
    if (pos.size() == 1) continue;
    out[i].vel = i + 1 < pos.size() ? Vec2((pos[i + 1] - pos[i]) / scn.sample_period)
                                    : Vec2((pos[i] - pos[i - 1]) / scn.sample_period);
  }
  return out;
}

MeasurementFrame generate_measurements(const Scenario& scn, const NoiseModel& noise,
                                       const Point2& agent, int t, std::uint64_t seed) {
  MeasurementFrame frame;
  frame.t = t;
  const double sigma_s = noise.toa_sigma / kSpeedOfLight;
  const double max_delay = 2.0 * noise.roi_radius / kSpeedOfLight;
  for (std::size_t k = 0; k < scn.pas.size(); ++k) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t), k}));
    std::bernoulli_distribution keep(noise.p_detect);
    std::normal_distribution<double> gauss(0.0, sigma_s);
    std::poisson_distribution<int> n_false(noise.mu_false > 0.0 ? noise.mu_false : 1.0);
    std::uniform_real_distribution<double> clutter(0.0, max_delay);

    std::vector<double> toas;
    for (const auto& path : visible_paths(scn, agent, k)) {
      const bool kept = keep(rng);
      const double e = gauss(rng);
      if (!kept) continue;
      const double toa = path.length / kSpeedOfLight + e;
      if (toa > 0.0) toas.push_back(toa);
    }
    const int nf = noise.mu_false > 0.0 ? n_false(rng) : 0;
    for (int i = 0; i < nf; ++i) {
      double z = clutter(rng);
      while (!(z > 0.0)) z = clutter(rng);
      toas.push_back(z);
    }
    std::shuffle(toas.begin(), toas.end(), rng);
    frame.per_pa.push_back(std::move(toas));
  }
  return frame;
}

MeasurementFrame generate_measurements(const Scenario& scn, const NoiseModel& noise, int t,
                                       std::uint64_t seed) {
  const auto traj = generate_trajectory(scn);
  if (t < 1 || static_cast<std::size_t>(t) > traj.size()) {
    throw std::out_of_range("generate_measurements: t outside the trajectory");
  }
  return generate_measurements(scn, noise, traj[t - 1].pos, t, seed);
}

std::vector<ScanReturn> generate_active_scan_labeled(const Scenario& scn, const SignalConfig& cfg,
                                                     const Point2& agent, int n_beams,
                                                     std::uint64_t seed) {
  if (n_beams < 1) throw std::invalid_argument("active scan: n_beams must be at least 1");
  std::vector<ScanReturn> out;
  for (int i = 0; i < n_beams; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n_beams;
    const Vec2 dir(std::cos(phi), std::sin(phi));
    double best = std::numeric_limits<double>::infinity();
    int hit = -1;
    for (std::size_t l = 0; l < scn.walls.size(); ++l) {
      double s = 0.0, u = 0.0;
      if (!intersect(agent, dir, scn.walls[l], s, u)) continue;
      if (s > kEps && u >= 0.0 && u <= 1.0 && s < best) {
        best = s;
        hit = static_cast<int>(l);
      }
    }
    if (hit < 0) continue;
    const Vec2 e = scn.walls[hit].b - scn.walls[hit].a;
    const Vec2 n(-e.y() / e.norm(), e.x() / e.norm());
    const double psi = std::acos(std::min(1.0, std::abs(dir.dot(n))));
    if (psi >= 0.5 * std::numbers::pi - 1e-6) continue;
    const double rcs = rcs_of_incidence(cfg, psi);
    const Echo echo = simulate_echo(cfg, best, rcs, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    try {
      const DistanceEstimate est = estimate_distance(echo, cfg, rcs);
      out.push_back({{phi, est.d_hat, est.d_var}, hit});
    } catch (const NoPeakError&) {
    }
  }
  return out;
}

std::vector<Rsp> generate_active_scan(const Scenario& scn, const SignalConfig& cfg,
                                      const Point2& agent, int n_beams, std::uint64_t seed) {
  std::vector<Rsp> out;
  for (const auto& r : generate_active_scan_labeled(scn, cfg, agent, n_beams, seed)) {
    out.push_back(r.rsp);
  }
  return out;
}

std::vector<GaussianVrp> vrp_priors_from_scan(const Point2& rp,
                                              const std::vector<ScanReturn>& scan) {
  std::map<int, std::vector<Rsp>> groups;
  for (const auto& r : scan) groups[r.wall].push_back(r.rsp);
  std::vector<GaussianVrp> out;
  for (const auto& [wall, rsps] : groups) {
    if (rsps.size() < 2) continue;
    out.push_back(vrp_from_rsps(rp, rsps, rp));
  }
  return out;
}

}  // namespace hslam
