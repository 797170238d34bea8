#pragma once

// Active sensing: OFDM echo model of a single reflector, the distance
// Cramer-Rao bound, a single-path distance estimator, and propagation of
// distance uncertainty into a Gaussian VRP estimate.

#include "hslam/geometry.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hslam {

struct SignalConfig {
  double carrier_freq = 28e9;         // Hz
  double subcarrier_spacing = 120e3;  // Hz
  int num_subcarriers = 200;
  double noise_var = 1.0;  // complex noise power per subcarrier; 0 means noiseless
  double rcs_gamma = 1.0;
  double rcs_eta = 0.2;

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  double bandwidth() const { return num_subcarriers * subcarrier_spacing; }

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// One reflection sample point: beam angle, distance estimate and its variance.
struct Rsp {
  double phi = 0.0;
  double d_mean = 0.0;
  double d_var = 0.0;
};

struct GaussianVrp {
  Point2 mean = Point2::Zero();
  Mat2 cov = Mat2::Zero();
};

class NoPeakError : public std::runtime_error {
 public:
  explicit NoPeakError(const std::string& what) : std::runtime_error(what) {}
};

using Echo = std::vector<std::complex<double>>;

/// Gain of subcarrier n (1-based) for a reflector at distance d with cross
/// section rcs. The amplitude coefficient is taken real and positive.
std::complex<double> reflection_gain(const SignalConfig& cfg, double d, double rcs, int n);

/// Radar cross section gamma * cos(psi)^(2 eta) at incidence angle psi.
double rcs_of_incidence(const SignalConfig& cfg, double psi);

/// Received echo r_n = gain_n(d) + circular complex Gaussian noise of power noise_var.
Echo simulate_echo(const SignalConfig& cfg, double d, double rcs, std::uint64_t seed);

double snr(const SignalConfig& cfg, double d, double rcs);

/// Noise power that yields the given linear SNR for a reflector at (d, rcs).
double noise_var_for_snr(const SignalConfig& cfg, double d, double rcs, double snr_linear);

/// Closed-form distance variance bound (large-N_s approximation).
double distance_crlb(const SignalConfig& cfg, double d, double rcs);

/// Exact Fisher information of d from the direct subcarrier sum.
double exact_fisher_info(const SignalConfig& cfg, double d, double rcs);

struct DistanceEstimate {
  double d_hat = 0.0;
  double d_var = 0.0;
};

/// Periodogram maximum over a coarse grid of spacing c/(8B) on the unambiguous
/// range [0, c/(2 df)), refined by Newton iterations. d_var is the bound at
/// d_hat for the given rcs. Throws NoPeakError when the peak is below three
/// times the median of the coarse-grid objective.
DistanceEstimate estimate_distance(std::span<const std::complex<double>> echo,
                                   const SignalConfig& cfg, double rcs);

/// First-order Taylor propagation of two RSPs into a Gaussian VRP. The beams
/// originate at `sensor`; the 3-argument form assumes the sensor sits at rp.
GaussianVrp taylor_vrp_pair(const Point2& rp, const Rsp& rsp1, const Rsp& rsp2,
                            const Point2& sensor);
GaussianVrp taylor_vrp_pair(const Point2& rp, const Rsp& rsp1, const Rsp& rsp2);

/// Gradient of the closed-form VRP with respect to w = [x1, x2, y1, y2]:
/// column 0 is d x_vrp / d w, column 1 is d y_vrp / d w.
Eigen::Matrix<double, 4, 2> taylor_vrp_gradient(const Point2& rp, const Point2& rsp1_mean,
                                                const Point2& rsp2_mean);

/// Averages the M-1 pair solutions (1, m): mean is the arithmetic average and
/// covariance is the sum of covariances over (M-1)^2.
GaussianVrp fuse_vrp_solutions(std::span<const GaussianVrp> solutions);

/// Pairs RSP 1 with each other RSP and fuses the solutions.
GaussianVrp vrp_from_rsps(const Point2& rp, std::span<const Rsp> rsps, const Point2& sensor);

}  // namespace hslam
