#pragma once

// Particle-based belief propagation SLAM over PA and VRP features. Each time
// slot predicts the agent and the features, then processes the anchors one
// after another: measurement evaluation, loopy data association, belief update
// and births. Refinement and pruning close the slot.

#include "hslam/belief.hpp"
#include "hslam/rng.hpp"
#include "hslam/scenario.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hslam {

struct SlamParams {
  double p_detect = 0.95;
  double p_survive = 0.999;
  double mu_false = 1.0;
  double mu_new = 1e-4;
  double prune_threshold = 1e-4;
  double detect_threshold = 0.5;
  double sim_threshold = 1.0;  // meters
  int n_particles = 5000;
  double driving_var_agent = 0.0278;
  double driving_var_feature = 1e-8;
  int da_iterations = 20;
  double da_tolerance = 1e-6;

  double toa_sigma = 0.1;     // meters
  double roi_radius = 180.0;  // meters
  double sample_period = 1.0;

  /// A feature informs the agent only if its anchor-position spread
  /// sqrt(trace cov) is below this (meters).
  double agent_gate = 5.0;
  /// Std of the kernel jitter added to feature particles after resampling.
  double roughening = 0.02;
  /// A measurement spawns a new VRP when P(b_j = 0) exceeds this.
  double birth_relevance = 0.5;
  /// Lower bound kept on a confirmed feature's existence for other anchors,
  /// so a surface that comes into view of another anchor can be re-acquired.
  double reacquire_floor = 1e-3;

  void validate() const;
  double false_density() const { return 1.0 / (2.0 * roi_radius); }
};

class DegenerateWeightsError : public std::runtime_error {
 public:
  explicit DegenerateWeightsError(const std::string& what) : std::runtime_error(what) {}
};

/// a[i][j]: P(a_i = j), j = 0 (missed) .. M. b[j][i]: P(b_j = i), i = 0 (not a
/// legacy feature) .. K. nu[j][i] is the message from measurement j to feature
/// i and mu[i][j] the reverse, both with the a = 0 / b = 0 entry normalized to 1.
struct AssociationMarginals {
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> b;
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> nu;
  int iterations = 0;
};

/// beta[i][0..M]: message from legacy feature i for a_i = 0..M. xi[j]: weight
/// of b_j = 0 (false alarm or new feature).
AssociationMarginals loopy_data_association(const std::vector<std::vector<double>>& beta,
                                            const std::vector<double>& xi, int iterations,
                                            double tolerance = 1e-6);

/// Gaussian density of c*z - |agent - anchor| with std sigma (range units).
double toa_likelihood(double z, const Point2& agent, const Point2& anchor, double sigma);

/// Same for a VRP feature: the anchor is the VA obtained by mirroring the PA
/// estimate across the surface of (rp, vrp).
double toa_likelihood_vrp(double z, const Point2& agent, const Point2& vrp, const Point2& pa,
                          const Point2& rp, double sigma);

/// Legacy factor. exists=false gives 1; a=0 gives 1-P_d; a=j gives
/// P_d * likelihood(z_j) / (mu_false f_false).
double g_factor(const Point2& agent, const Point2& anchor, bool exists, int a,
                const std::vector<double>& z, const SlamParams& params);

/// New-feature factor for measurement z_j. exists=false gives the dummy
/// density 1; b != 0 gives 0; b = 0 gives mu_new f_new lik / (mu_false f_false).
double h_factor(const Point2& agent, const Point2& anchor, bool exists, int b, double z_j,
                double f_new, const SlamParams& params);

void predict_agent(AgentBelief& belief, const SlamParams& params, double dt, Rng& rng);
void predict_features(std::vector<FeatureBelief>& features, const SlamParams& params, Rng& rng);

/// Systematic resampling; returns the chosen indices.
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t n,
                                             Rng& rng);

/// Reweights one legacy feature with per-particle likelihoods lik[q][j] of the
/// ranges and the DA messages nu_j (for this feature), updates existence slot
/// `anchor`, then resamples. Returns the evidence S = sum_q w_q factor_q.
double update_feature(FeatureBelief& f, const std::vector<std::vector<double>>& lik,
                      const std::vector<double>& nu, int anchor, const SlamParams& params,
                      Rng& rng, bool resample = true);

struct SlamState {
  int t = 0;
  Point2 rp = Point2::Zero();
  int n_anchors = 0;
  AgentBelief agent;
  std::vector<FeatureBelief> features;
  int next_feature_id = 2;
  int degenerate_steps = 0;
  Rng rng;
};

struct AnchorPassInfo {
  int births = 0;
  bool degenerate = false;
};

/// One anchor pass at the current slot: evaluation, association, updates, births.
AnchorPassInfo process_anchor(SlamState& state, int k, const std::vector<double>& toas,
                              const SlamParams& params);

/// One time slot. The state must have been initialized (see pa_init).
void step(SlamState& state, const MeasurementFrame& frame, const SlamParams& params);

struct FeatureEstimate {
  FeatureKind kind;
  int pa_index;
  int feature_index;
  Point2 pos;
  double existence;
  double var;  // trace of the particle covariance
};

struct SlamEstimate {
  Point2 agent;
  std::vector<FeatureEstimate> features;
};

/// MMSE agent position and detected features (existence > detect_threshold).
SlamEstimate estimate(const SlamState& state, const SlamParams& params);

}  // namespace hslam
