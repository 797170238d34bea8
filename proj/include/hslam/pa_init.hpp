#pragma once

// Anchor initialization at t = 1: ranges other than the shortest become VA
// candidate circles around RP, each circle is mirrored through every VRP prior
// into PA candidates, and cells hit by three or more VA candidates form the PA
// belief.

#include "hslam/active_sensing.hpp"
#include "hslam/belief.hpp"
#include "hslam/rng.hpp"
#include "hslam/scenario.hpp"
#include "hslam/slam_engine.hpp"

#include <optional>
#include <vector>

namespace hslam {

using Cloud = std::vector<Point2>;

/// One cloud per TOA of `frame.per_pa[k]` except the smallest: uniform angle
/// on the circle of radius c*tau around rp, radius perturbed by toa_sigma.
std::vector<Cloud> va_candidates(const Point2& rp, const MeasurementFrame& frame, std::size_t k,
                                 int n_particles, double toa_sigma, Rng& rng);

/// One PA-candidate cloud per prior: each VA particle is mirrored through a
/// VRP drawn from that prior.
std::vector<Cloud> pa_candidates(const Cloud& va_cloud, const std::vector<GaussianVrp>& priors,
                                 const Point2& rp, Rng& rng);

struct PaInitResult {
  Cloud particles;
  double existence = 0.0;
  bool informed = false;  // false when the fused grid had no cell with >= 3 candidates
};

/// A PA-candidate cloud and the hypothesis that produced it: the index of the
/// VRP prior it was mirrored through, or -1 for the LOS ring (identity).
struct CandidateCloud {
  Cloud points;
  int source = -1;
};

/// Joint log-likelihood of a PA position given the t = 1 ranges and the VRP
/// priors: predicted LOS and single-bounce ranges are assigned to distinct
/// measurements (or missed) and the best assignment is scored.
class PaConsensus {
 public:
  PaConsensus(const Point2& rp, std::vector<double> ranges, const std::vector<GaussianVrp>& priors,
              double toa_sigma, double p_detect, double clutter_intensity);
  double operator()(const Point2& pa) const;

 private:
  Point2 rp_;
  std::vector<double> ranges_;
  std::vector<Point2> centers_;  // rp followed by the prior means
  std::vector<double> vars_;
  double log_miss_;
  double log_hit_scale_;
};

/// candidates[v] holds the PA-candidate clouds derived from candidate v. A
/// cell of size grid_cell counts the largest number of candidates that can be
/// paired with distinct sources there; particles are drawn from cells with a
/// count >= 3, weighted by the count and, when given, by the consensus
/// likelihood. With fewer than three candidates, or no such cell, returns the
/// union of all clouds with existence 0.5.
PaInitResult fuse_pa_candidates(const std::vector<std::vector<CandidateCloud>>& candidates,
                                double grid_cell, int n_particles, Rng& rng,
                                const PaConsensus* consensus = nullptr);

/// Circle around rp at the shortest range of the frame (the LOS ring).
Cloud los_ring(const Point2& rp, const MeasurementFrame& frame, std::size_t k, int n_particles,
               double toa_sigma, Rng& rng);

/// PA belief for anchor k. The LOS ring joins the VA-derived candidates. Without
/// priors, or without enough evidence, the LOS ring is returned with existence 0.5.
PaInitResult initialize_pa(const Point2& rp, const MeasurementFrame& frame, std::size_t k,
                           const std::vector<GaussianVrp>& priors, const SlamParams& params,
                           Rng& rng);

/// Draws n particles from a Gaussian VRP.
Cloud sample_gaussian(const GaussianVrp& g, int n, Rng& rng);

/// Full SLAM state at t = 1: agent at rp with unknown velocity
/// (std step_length / sample_period per axis), one PA feature per anchor, one
/// VRP feature per prior (existence 0.999).
SlamState initialize_state(const Point2& rp, const MeasurementFrame& frame1,
                           const std::vector<GaussianVrp>& priors, const SlamParams& params,
                           double init_speed_std, std::uint64_t seed);

}  // namespace hslam
