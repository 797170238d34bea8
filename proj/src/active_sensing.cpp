#include "hslam/active_sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace hslam {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_distance(double d, const char* op) {
  if (!(d > 0.0) || !std::isfinite(d)) {
    std::ostringstream os;
    os << op << ": distance must be positive and finite (got " << d << ")";
    throw std::invalid_argument(os.str());
  }
}

double amplitude_sq(const SignalConfig& cfg, double rcs) {
  const double lambda = cfg.wavelength();
  return lambda * lambda * rcs / std::pow(4.0 * kPi, 3);
}

// Angular rate of subcarrier n's phase with respect to distance.
double phase_rate(const SignalConfig& cfg, int n) {
  return 2.0 * kPi * (n - 0.5 * cfg.num_subcarriers) * cfg.subcarrier_spacing * 2.0 /
         kSpeedOfLight;
}

}  // namespace

void SignalConfig::validate() const {
  auto fail = [](const char* field) {
    throw std::invalid_argument(std::string("signal config: invalid ") + field);
  };
  if (!(carrier_freq > 0.0)) fail("carrier_freq");
  if (!(subcarrier_spacing > 0.0)) fail("subcarrier_spacing");
  if (num_subcarriers < 2) fail("num_subcarriers");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) fail("noise_var");
  if (!(rcs_gamma > 0.0)) fail("rcs_gamma");
  if (!(rcs_eta > 0.0)) fail("rcs_eta");
}

std::complex<double> reflection_gain(const SignalConfig& cfg, double d, double rcs, int n) {
  require_positive_distance(d, "reflection_gain");
  if (n < 1 || n > cfg.num_subcarriers) {
    throw std::invalid_argument("reflection_gain: subcarrier index out of range");
  }
  const double b = std::sqrt(amplitude_sq(cfg, rcs));
  return (b / (d * d)) * std::polar(1.0, -phase_rate(cfg, n) * d);
}

double rcs_of_incidence(const SignalConfig& cfg, double psi) {
  if (!(std::abs(psi) < 0.5 * kPi)) {
    throw std::invalid_argument("rcs_of_incidence: grazing incidence (|psi| >= pi/2)");
  }
  return cfg.rcs_gamma * std::pow(std::cos(psi), 2.0 * cfg.rcs_eta);
}

Echo simulate_echo(const SignalConfig& cfg, double d, double rcs, std::uint64_t seed) {
  require_positive_distance(d, "simulate_echo");
  const int ns = cfg.num_subcarriers;
  Echo echo(static_cast<std::size_t>(ns));
  for (int n = 1; n <= ns; ++n) echo[n - 1] = reflection_gain(cfg, d, rcs, n);
  if (cfg.noise_var > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * cfg.noise_var));
    for (auto& r : echo) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      r += std::complex<double>(re, im);
    }
  }
  return echo;
}

double snr(const SignalConfig& cfg, double d, double rcs) {
  require_positive_distance(d, "snr");
  return amplitude_sq(cfg, rcs) / (std::pow(d, 4) * cfg.noise_var);
}

double noise_var_for_snr(const SignalConfig& cfg, double d, double rcs, double snr_linear) {
  require_positive_distance(d, "noise_var_for_snr");
  if (!(snr_linear > 0.0)) throw std::invalid_argument("noise_var_for_snr: snr must be positive");
  return amplitude_sq(cfg, rcs) / (std::pow(d, 4) * snr_linear);
}

double distance_crlb(const SignalConfig& cfg, double d, double rcs) {
  require_positive_distance(d, "distance_crlb");
  if (cfg.noise_var == 0.0) return 0.0;
  const double b = cfg.bandwidth();
  const double k = 8.0 * kPi * kPi * b * b * cfg.num_subcarriers /
                   (3.0 * kSpeedOfLight * kSpeedOfLight);
  return 1.0 / (k * snr(cfg, d, rcs));
}

double exact_fisher_info(const SignalConfig& cfg, double d, double rcs) {
  require_positive_distance(d, "exact_fisher_info");
  const double b2 = amplitude_sq(cfg, rcs);
  const double df = cfg.subcarrier_spacing;
  const double c2 = kSpeedOfLight * kSpeedOfLight;
  double sum = 0.0;
  for (int n = 1; n <= cfg.num_subcarriers; ++n) {
    const double off = n - 0.5 * cfg.num_subcarriers;
    sum += 4.0 / (d * d) + 16.0 * kPi * kPi * off * off * df * df / c2;
  }
  return 2.0 / cfg.noise_var * b2 / std::pow(d, 4) * sum;
}

DistanceEstimate estimate_distance(std::span<const std::complex<double>> echo,
                                   const SignalConfig& cfg, double rcs) {
  const int ns = cfg.num_subcarriers;
  if (static_cast<int>(echo.size()) != ns) {
    throw std::invalid_argument("estimate_distance: echo length differs from num_subcarriers");
  }
  std::vector<double> rate(static_cast<std::size_t>(ns));
  for (int n = 1; n <= ns; ++n) rate[n - 1] = phase_rate(cfg, n);

  // Coarse grid: spacing c/(8B), four times finer than the range resolution
  // c/(2B), over one unambiguous range period c/(2 df).
  const double step = kSpeedOfLight / (8.0 * cfg.bandwidth());
  const int n_grid = static_cast<int>(std::floor(kSpeedOfLight / (2.0 * cfg.subcarrier_spacing) / step));
  // Split real/imag arrays; std::complex multiplication is slow without fast-math.
  const std::size_t m = rate.size();
  std::vector<double> er(m), ei(m), rr(m), ri(m), pr(m, 1.0), pi(m, 0.0);
  for (std::size_t n = 0; n < m; ++n) {
    er[n] = echo[n].real();
    ei[n] = echo[n].imag();
    rr[n] = std::cos(rate[n] * step);
    ri[n] = std::sin(rate[n] * step);
  }

  std::vector<double> objective(static_cast<std::size_t>(n_grid));
  int best = 0;
  for (int k = 0; k < n_grid; ++k) {
    double sr = 0.0, si = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      sr += er[n] * pr[n] - ei[n] * pi[n];
      si += er[n] * pi[n] + ei[n] * pr[n];
      const double nr = pr[n] * rr[n] - pi[n] * ri[n];
      pi[n] = pr[n] * ri[n] + pi[n] * rr[n];
      pr[n] = nr;
    }
    objective[k] = sr * sr + si * si;
    if (objective[k] > objective[best]) best = k;
  }
  const double peak = objective[best];
  std::vector<double> sorted = objective;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double floor_median = sorted[sorted.size() / 2];
  if (!(peak >= 3.0 * floor_median) || peak == 0.0) {
    throw NoPeakError("estimate_distance: no peak above the noise floor");
  }

  // Newton refinement of |S(d)|^2 around the grid peak.
  double d = best * step;
  for (int it = 0; it < 20; ++it) {
    std::complex<double> s{0.0, 0.0}, s1{0.0, 0.0}, s2{0.0, 0.0};
    for (std::size_t n = 0; n < m; ++n) {
      const double c = std::cos(rate[n] * d), sn = std::sin(rate[n] * d);
      const double re = er[n] * c - ei[n] * sn;
      const double im = er[n] * sn + ei[n] * c;
      s += std::complex<double>(re, im);
      s1 += std::complex<double>(-rate[n] * im, rate[n] * re);
      s2 += std::complex<double>(-rate[n] * rate[n] * re, -rate[n] * rate[n] * im);
    }
    const double grad = 2.0 * std::real(std::conj(s) * s1);
    const double curv = 2.0 * (std::norm(s1) + std::real(std::conj(s) * s2));
    double delta = curv < 0.0 ? -grad / curv : std::copysign(0.25 * step, grad);
    delta = std::clamp(delta, -0.5 * step, 0.5 * step);
    d += delta;
    if (std::abs(delta) < 1e-6) break;
  }
  if (!(d > 0.0)) d = 1e-6;
  return {d, distance_crlb(cfg, d, rcs)};
}

Eigen::Matrix<double, 4, 2> taylor_vrp_gradient(const Point2& rp, const Point2& m1,
                                                const Point2& m2) {
  const double xr = rp.x(), yr = rp.y();
  const double x1 = m1.x(), y1 = m1.y();
  const double dx = m2.x() - m1.x();
  const double dy = m2.y() - m1.y();

  const double a0 = xr * dx * dx - (xr - 2.0 * x1) * dy * dy + 2.0 * (yr - y1) * dy * dx;
  const double a1 = -2.0 * xr * dx + 2.0 * dy * dy - 2.0 * (yr - y1) * dy;
  const double a2 = 2.0 * xr * dx + 2.0 * (yr - y1) * dy;
  const double a3 = 2.0 * (xr - 2.0 * x1) * dy + 2.0 * dx * (-m2.y() - yr + 2.0 * y1);
  const double a4 = -2.0 * (xr - 2.0 * x1) * dy + 2.0 * (yr - y1) * dx;

  const double b0 = dx * dx + dy * dy;
  const double b1 = -2.0 * dx;
  const double b2 = 2.0 * dx;
  const double b3 = -2.0 * dy;
  const double b4 = 2.0 * dy;

  const double c0 = yr * dy * dy - (yr - 2.0 * y1) * dx * dx + 2.0 * (xr - x1) * dy * dx;
  const double c1 = 2.0 * (yr - 2.0 * y1) * dx + 2.0 * dy * (-m2.x() - xr + 2.0 * x1);
  const double c2 = -2.0 * (yr - 2.0 * y1) * dx + 2.0 * (xr - x1) * dy;
  const double c3 = -2.0 * yr * dy + 2.0 * dx * dx - 2.0 * (xr - x1) * dx;
  const double c4 = 2.0 * yr * dy + 2.0 * (xr - x1) * dx;

  if (b0 < 1e-12) throw DegenerateGeometryError("taylor_vrp: reflection sample points coincide");

  const double inv = 1.0 / (b0 * b0);
  Eigen::Matrix<double, 4, 2> q;
  q << (a1 * b0 - a0 * b1) * inv, (c1 * b0 - c0 * b1) * inv,
       (a2 * b0 - a0 * b2) * inv, (c2 * b0 - c0 * b2) * inv,
       (a3 * b0 - a0 * b3) * inv, (c3 * b0 - c0 * b3) * inv,
       (a4 * b0 - a0 * b4) * inv, (c4 * b0 - c0 * b4) * inv;
  return q;
}

GaussianVrp taylor_vrp_pair(const Point2& rp, const Rsp& rsp1, const Rsp& rsp2,
                            const Point2& sensor) {
  require_finite(rp, "rp");
  require_finite(sensor, "sensor");
  const Vec2 u1(std::cos(rsp1.phi), std::sin(rsp1.phi));
  const Vec2 u2(std::cos(rsp2.phi), std::sin(rsp2.phi));
  const Point2 m1 = sensor + rsp1.d_mean * u1;
  const Point2 m2 = sensor + rsp2.d_mean * u2;
  const double dx = m2.x() - m1.x();
  const double dy = m2.y() - m1.y();
  const double b0 = dx * dx + dy * dy;
  if (b0 < 1e-12) throw DegenerateGeometryError("taylor_vrp: reflection sample points coincide");

  GaussianVrp out;
  out.mean = vrp_from_two_rsps(rp, m1, m2);
  const auto q = taylor_vrp_gradient(rp, m1, m2);
  // w = [x1, x2, y1, y2], independent per-coordinate variances.
  const Eigen::Vector4d var(rsp1.d_var * u1.x() * u1.x(), rsp2.d_var * u2.x() * u2.x(),
                            rsp1.d_var * u1.y() * u1.y(), rsp2.d_var * u2.y() * u2.y());
  out.cov = q.transpose() * var.asDiagonal() * q;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

GaussianVrp taylor_vrp_pair(const Point2& rp, const Rsp& rsp1, const Rsp& rsp2) {
  return taylor_vrp_pair(rp, rsp1, rsp2, rp);
}

GaussianVrp fuse_vrp_solutions(std::span<const GaussianVrp> solutions) {
  if (solutions.empty()) throw std::invalid_argument("fuse_vrp_solutions: empty solution list");
  GaussianVrp out;
  for (const auto& s : solutions) {
    out.mean += s.mean;
    out.cov += s.cov;
  }
  const double m = static_cast<double>(solutions.size());
  out.mean /= m;
  out.cov /= m * m;
  return out;
}

GaussianVrp vrp_from_rsps(const Point2& rp, std::span<const Rsp> rsps, const Point2& sensor) {
  if (rsps.size() < 2) throw std::invalid_argument("vrp_from_rsps: need at least two RSPs");
  std::vector<GaussianVrp> pairs;
  pairs.reserve(rsps.size() - 1);
  for (std::size_t m = 1; m < rsps.size(); ++m) {
    pairs.push_back(taylor_vrp_pair(rp, rsps[0], rsps[m], sensor));
  }
  return fuse_vrp_solutions(pairs);
}

}  // namespace hslam
