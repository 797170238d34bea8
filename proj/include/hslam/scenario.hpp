#pragma once

// Synthetic world: floor plan, trajectory, image-method single-bounce paths,
// passive TOA frames and active-sensing scans.

#include "hslam/active_sensing.hpp"
#include "hslam/geometry.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hslam {

struct Wall {
  Point2 a;
  Point2 b;
};

struct Scenario {
  std::vector<Wall> walls;
  std::vector<Point2> pas;
  std::vector<Point2> waypoints;
  double step_length = 0.5;
  double sample_period = 1.0;

  /// Reference point: the first waypoint.
  const Point2& rp() const { return waypoints.front(); }
  void validate() const;
};

struct NoiseModel {
  double toa_sigma = 0.1;  // meters
  double p_detect = 0.95;
  double mu_false = 1.0;
  double roi_radius = 180.0;  // meters

  void validate() const;
  /// Clutter density in range units (uniform over the ROI diameter).
  double false_density() const { return 1.0 / (2.0 * roi_radius); }
};

struct AgentState {
  Point2 pos = Point2::Zero();
  Vec2 vel = Vec2::Zero();
};

struct MeasurementFrame {
  int t = 0;
  std::vector<std::vector<double>> per_pa;  // TOAs in seconds
};

struct PaFeatures {
  Point2 pa;
  std::vector<Point2> vas;   // one per wall, same order as Scenario::walls
  std::vector<Point2> vrps;  // one per wall
};

/// A propagation path from PA k to the agent; wall == -1 marks LOS.
struct Path {
  int wall = -1;
  double length = 0.0;
};

std::vector<PaFeatures> ground_truth_features(const Scenario& scn);

/// True if the open segment p->q crosses any wall other than `skip`.
bool segment_blocked(const Point2& p, const Point2& q, const std::vector<Wall>& walls,
                     int skip = -1);

/// Length of the specular path pa -> wall -> agent, if it exists and is unblocked.
std::optional<double> visible_single_bounce(const Point2& agent, const Point2& pa,
                                            const Wall& wall, const std::vector<Wall>& walls);

/// LOS (always present) followed by every visible single-bounce path.
std::vector<Path> visible_paths(const Scenario& scn, const Point2& agent, std::size_t k);

std::vector<AgentState> generate_trajectory(const Scenario& scn);

/// Passive frame at time slot t for the given true agent position.
MeasurementFrame generate_measurements(const Scenario& scn, const NoiseModel& noise,
                                       const Point2& agent, int t, std::uint64_t seed);
/// Same, taking the agent position from the scenario trajectory (t is 1-based).
MeasurementFrame generate_measurements(const Scenario& scn, const NoiseModel& noise, int t,
                                       std::uint64_t seed);

struct ScanReturn {
  Rsp rsp;
  int wall = -1;  // index of the wall the beam hit
};

/// Beam sweep phi_i = 2 pi i / n_beams with per-beam echo synthesis and
/// distance estimation. Beams that hit nothing, graze a wall or produce no
/// detectable peak emit nothing.
std::vector<ScanReturn> generate_active_scan_labeled(const Scenario& scn, const SignalConfig& cfg,
                                                     const Point2& agent, int n_beams,
                                                     std::uint64_t seed);
std::vector<Rsp> generate_active_scan(const Scenario& scn, const SignalConfig& cfg,
                                      const Point2& agent, int n_beams, std::uint64_t seed);

/// Groups scan returns by wall and fuses each group with two or more RSPs
/// into a Gaussian VRP relative to rp (the scan origin).
std::vector<GaussianVrp> vrp_priors_from_scan(const Point2& rp,
                                              const std::vector<ScanReturn>& scan);

}  // namespace hslam
