#include "hslam/slam_engine.hpp"

#include "hslam/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hslam {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr std::size_t kRingMessageParticles = 64;

double gauss_pdf(double err, double var) {
  return kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * err * err / var);
}

// mu_false * f_false in range units; a tiny floor keeps clutter-free runs finite.
double clutter_intensity(const SlamParams& p) {
  return std::max(p.mu_false, 1e-9) * p.false_density();
}

void normalize(std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) s += x;
  if (!(s > 0.0) || !std::isfinite(s)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return;
  }
  for (double& x : w) x /= s;
}

int find_pa(const SlamState& s, int k) {
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    const auto& f = s.features[i];
    if (f.kind == FeatureKind::PA && f.pa_index == k + 1) return static_cast<int>(i);
  }
  return -1;
}

// Position the feature acts as a transmitter from: the PA itself or its VA.
Point2 anchor_point(const FeatureBelief& f, const Point2& particle, const Point2& pa_hat,
                    const Point2& rp) {
  if (f.kind == FeatureKind::PA) return particle;
  if ((particle - rp).norm() < kDegenerateTol) return rp + Vec2(1e6, 0.0);
  return va_from_pa(SurfaceFrame{rp, particle}, pa_hat);
}

}  // namespace

void SlamParams::validate() const {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("slam params: invalid ") + what);
  };
  if (!(p_detect > 0.0 && p_detect <= 1.0)) fail("p_detect");
  if (!(p_survive > 0.0 && p_survive <= 1.0)) fail("p_survive");
  if (!(mu_false >= 0.0)) fail("mu_false");
  if (!(mu_new >= 0.0)) fail("mu_new");
  if (!(prune_threshold > 0.0)) fail("prune_threshold");
  if (!(detect_threshold > 0.0 && detect_threshold < 1.0)) fail("detect_threshold");
  if (!(sim_threshold > 0.0)) fail("sim_threshold");
  if (n_particles < 1) fail("n_particles");
  if (!(driving_var_agent >= 0.0)) fail("driving_var_agent");
  if (!(driving_var_feature >= 0.0)) fail("driving_var_feature");
  if (da_iterations < 1) fail("da_iterations");
  if (!(toa_sigma > 0.0)) fail("toa_sigma");
  if (!(roi_radius > 0.0)) fail("roi_radius");
  if (!(sample_period > 0.0)) fail("sample_period");
}

AssociationMarginals loopy_data_association(const std::vector<std::vector<double>>& beta,
                                            const std::vector<double>& xi, int iterations,
                                            double tolerance) {
  const std::size_t K = beta.size();
  const std::size_t M = xi.size();
  for (const auto& row : beta) {
    if (row.size() != M + 1) throw std::invalid_argument("loopy_data_association: beta row size");
  }
  AssociationMarginals out;
  out.mu.assign(K, std::vector<double>(M, 0.0));
  out.nu.assign(M, std::vector<double>(K, 1.0));

  for (int it = 0; it < iterations && K > 0 && M > 0; ++it) {
    for (std::size_t i = 0; i < K; ++i) {
      double total = beta[i][0];
      for (std::size_t j = 0; j < M; ++j) total += beta[i][j + 1] * out.nu[j][i];
      for (std::size_t j = 0; j < M; ++j) {
        const double den = total - beta[i][j + 1] * out.nu[j][i];
        out.mu[i][j] = den > 0.0 ? beta[i][j + 1] / den : 0.0;
      }
    }
    double change = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      double total = xi[j];
      for (std::size_t i = 0; i < K; ++i) total += out.mu[i][j];
      for (std::size_t i = 0; i < K; ++i) {
        const double den = total - out.mu[i][j];
        const double nu = den > 0.0 ? 1.0 / den : 0.0;
        change = std::max(change, std::abs(nu - out.nu[j][i]));
        out.nu[j][i] = nu;
      }
    }
    out.iterations = it + 1;
    if (change < tolerance) break;
  }
  if (M == 0) out.nu.clear();

  out.a.assign(K, std::vector<double>(M + 1, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    auto& a = out.a[i];
    a[0] = beta[i][0];
    for (std::size_t j = 0; j < M; ++j) a[j + 1] = beta[i][j + 1] * out.nu[j][i];
    double s = 0.0;
    for (double x : a) s += x;
    if (s > 0.0) {
      for (double& x : a) x /= s;
    } else {
      std::fill(a.begin(), a.end(), 0.0);
      a[0] = 1.0;
    }
  }
  out.b.assign(M, std::vector<double>(K + 1, 0.0));
  for (std::size_t j = 0; j < M; ++j) {
    auto& b = out.b[j];
    b[0] = xi[j];
    for (std::size_t i = 0; i < K; ++i) b[i + 1] = out.mu[i][j];
    double s = 0.0;
    for (double x : b) s += x;
    if (s > 0.0) {
      for (double& x : b) x /= s;
    } else {
      std::fill(b.begin(), b.end(), 0.0);
      b[0] = 1.0;
    }
  }
  return out;
}

double toa_likelihood(double z, const Point2& agent, const Point2& anchor, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("toa_likelihood: sigma must be positive");
  return gauss_pdf(kSpeedOfLight * z - (agent - anchor).norm(), sigma * sigma);
}

double toa_likelihood_vrp(double z, const Point2& agent, const Point2& vrp, const Point2& pa,
                          const Point2& rp, double sigma) {
  return toa_likelihood(z, agent, va_from_pa(SurfaceFrame{rp, vrp}, pa), sigma);
}

double g_factor(const Point2& agent, const Point2& anchor, bool exists, int a,
                const std::vector<double>& z, const SlamParams& params) {
  if (a < 0 || a > static_cast<int>(z.size())) throw std::invalid_argument("g_factor: a out of range");
  if (!exists) return 1.0;
  if (a == 0) return 1.0 - params.p_detect;
  return params.p_detect * toa_likelihood(z[a - 1], agent, anchor, params.toa_sigma) /
         clutter_intensity(params);
}

double h_factor(const Point2& agent, const Point2& anchor, bool exists, int b, double z_j,
                double f_new, const SlamParams& params) {
  if (b < 0) throw std::invalid_argument("h_factor: b out of range");
  if (!exists) return 1.0;
  if (b != 0) return 0.0;
  return params.mu_new * f_new * toa_likelihood(z_j, agent, anchor, params.toa_sigma) /
         clutter_intensity(params);
}

void predict_agent(AgentBelief& belief, const SlamParams& params, double dt, Rng& rng) {
  // Near-constant velocity with white acceleration: the velocity noise has
  // variance driving_var_agent * dt^2 per axis, the position gets dt/2 of it.
  std::normal_distribution<double> accel(0.0, std::sqrt(params.driving_var_agent));
  for (auto& p : belief.particles) {
    const Vec2 a(accel(rng), accel(rng));
    p.pos += p.vel * dt + 0.5 * dt * dt * a;
    p.vel += dt * a;
  }
}

void predict_features(std::vector<FeatureBelief>& features, const SlamParams& params, Rng& rng) {
  std::normal_distribution<double> jitter(0.0, std::sqrt(params.driving_var_feature));
  for (auto& f : features) {
    for (double& r : f.existence) r *= params.p_survive;
    if (params.driving_var_feature > 0.0) {
      for (auto& p : f.particles) p += Vec2(jitter(rng), jitter(rng));
    }
  }
}

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t n,
                                             Rng& rng) {
  std::vector<std::size_t> idx(n);
  if (weights.empty()) throw std::invalid_argument("systematic_resample: no weights");
  double total = 0.0;
  for (double w : weights) total += w;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u0 = uni(rng) / static_cast<double>(n);
  double cum = weights[0] / total;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (u > cum && j + 1 < weights.size()) cum += weights[++j] / total;
    idx[i] = j;
  }
  return idx;
}

double update_feature(FeatureBelief& f, const std::vector<std::vector<double>>& lik,
                      const std::vector<double>& nu, int anchor, const SlamParams& params,
                      Rng& rng, bool resample) {
  const std::size_t n = f.particles.size();
  if (lik.size() != n) throw std::invalid_argument("update_feature: likelihood rows != particles");
  const double pd = params.p_detect;
  const double mf = clutter_intensity(params);
  double evidence = 0.0;
  std::vector<double> w(n);
  for (std::size_t q = 0; q < n; ++q) {
    double factor = 1.0 - pd;
    for (std::size_t j = 0; j < nu.size(); ++j) factor += pd * lik[q][j] * nu[j] / mf;
    w[q] = f.weights[q] * factor;
    evidence += w[q];
  }
  double& r = f.existence.at(anchor);
  r = r * evidence / (r * evidence + 1.0 - r);
  if (!std::isfinite(r)) r = 1.0;
  if (evidence > 0.0 && std::isfinite(evidence)) {
    for (double& x : w) x /= evidence;
    f.weights = std::move(w);
  }
  if (resample) {
    const auto idx = systematic_resample(f.weights, static_cast<std::size_t>(params.n_particles), rng);
    std::vector<Point2> np;
    np.reserve(idx.size());
    std::normal_distribution<double> rough(0.0, params.roughening);
    for (auto i : idx) {
      Point2 p = f.particles[i];
      if (params.roughening > 0.0) p += Vec2(rough(rng), rough(rng));
      np.push_back(p);
    }
    f.particles = std::move(np);
    f.weights.assign(f.particles.size(), 1.0 / static_cast<double>(f.particles.size()));
  }
  return evidence;
}

AnchorPassInfo process_anchor(SlamState& state, int k, const std::vector<double>& toas,
                              const SlamParams& params) {
  AnchorPassInfo info;
  const std::size_t M = toas.size();
  const double sigma2 = params.toa_sigma * params.toa_sigma;
  const double pd = params.p_detect;
  const double mf = clutter_intensity(params);
  std::vector<double> ranges(M);
  for (std::size_t j = 0; j < M; ++j) ranges[j] = kSpeedOfLight * toas[j];

  const Point2 agent_mean = state.agent.mean();
  const Mat2 agent_cov = state.agent.covariance();
  const int pa_idx = find_pa(state, k);
  const Point2 pa_hat = pa_idx >= 0 ? state.features[pa_idx].mean() : Point2::Zero();

  // Legacy set of this pass: PA k and every VRP (VRPs need a PA estimate).
  std::vector<std::size_t> legacy;
  if (pa_idx >= 0) {
    legacy.push_back(static_cast<std::size_t>(pa_idx));
    for (std::size_t i = 0; i < state.features.size(); ++i) {
      if (state.features[i].kind == FeatureKind::VRP) legacy.push_back(i);
    }
  }

  const std::size_t K = legacy.size();
  std::vector<std::vector<std::vector<double>>> lik(K);
  std::vector<std::vector<Point2>> anchors(K);
  std::vector<std::vector<double>> beta(K, std::vector<double>(M + 1, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    const FeatureBelief& f = state.features[legacy[i]];
    const double r = f.existence[k];
    const std::size_t n = f.particles.size();
    anchors[i].resize(n);
    lik[i].assign(n, std::vector<double>(M, 0.0));
    for (std::size_t q = 0; q < n; ++q) {
      const Point2 a = anchor_point(f, f.particles[q], pa_hat, state.rp);
      anchors[i][q] = a;
      const Vec2 diff = a - agent_mean;
      const double d = diff.norm();
      const Vec2 u = d > 0.0 ? Vec2(diff / d) : Vec2(1.0, 0.0);
      const double var = sigma2 + u.dot(agent_cov * u);
      for (std::size_t j = 0; j < M; ++j) {
        const double l = gauss_pdf(ranges[j] - d, var);
        lik[i][q][j] = l;
        beta[i][j + 1] += f.weights[q] * l;
      }
    }
    beta[i][0] = 1.0 - r * pd;
    for (std::size_t j = 0; j < M; ++j) beta[i][j + 1] *= r * pd / mf;
  }

  // Birth density whose range marginal is uniform over the ROI diameter, like clutter.
  const double new_ratio = params.mu_new / std::max(params.mu_false, 1e-9);
  const std::vector<double> xi(M, 1.0 + new_ratio);
  const AssociationMarginals da = loopy_data_association(beta, xi, params.da_iterations,
                                                         params.da_tolerance);

  // Agent update from reliable features, each summarized by its anchor moments.
  auto& agent = state.agent;
  const std::size_t na = agent.particles.size();
  std::vector<double> logw(na, 0.0);
  bool informed = false;
  for (std::size_t i = 0; i < K; ++i) {
    const FeatureBelief& f = state.features[legacy[i]];
    const double r = f.existence[k];
    if (!(r > params.detect_threshold)) continue;
    Point2 m = Point2::Zero();
    for (std::size_t q = 0; q < anchors[i].size(); ++q) m += f.weights[q] * anchors[i][q];
    Mat2 c = Mat2::Zero();
    for (std::size_t q = 0; q < anchors[i].size(); ++q) {
      const Vec2 d = anchors[i][q] - m;
      c += f.weights[q] * d * d.transpose();
    }
    if (!(std::sqrt(c.trace()) < params.agent_gate)) {
      // A wide PA (the LOS ring without priors) still constrains the agent;
      // its message is summed over a subsample of its particles.
      if (f.kind != FeatureKind::PA) continue;
      informed = true;
      const std::size_t nq = std::min<std::size_t>(anchors[i].size(), kRingMessageParticles);
      const auto sub = systematic_resample(f.weights, nq, state.rng);
      for (std::size_t a = 0; a < na; ++a) {
        double s = 0.0;
        for (auto q : sub) {
          const double d = (anchors[i][q] - agent.particles[a].pos).norm();
          double l = 1.0 - pd;
          for (std::size_t j = 0; j < M; ++j) l += pd * gauss_pdf(ranges[j] - d, sigma2) * da.nu[j][i] / mf;
          s += l;
        }
        logw[a] += std::log(r * s / static_cast<double>(nq) + 1.0 - r);
      }
      continue;
    }
    informed = true;
    for (std::size_t a = 0; a < na; ++a) {
      const Vec2 diff = m - agent.particles[a].pos;
      const double d = diff.norm();
      const Vec2 u = d > 0.0 ? Vec2(diff / d) : Vec2(1.0, 0.0);
      const double var = sigma2 + u.dot(c * u);
      double s = 1.0 - pd;
      for (std::size_t j = 0; j < M; ++j) {
        s += pd * gauss_pdf(ranges[j] - d, var) * da.nu[j][i] / mf;
      }
      logw[a] += std::log(r * s + 1.0 - r);
    }
  }
  if (informed) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a) {
      logw[a] += std::log(agent.weights[a]);
      mx = std::max(mx, logw[a]);
    }
    if (!std::isfinite(mx)) {
      info.degenerate = true;
    } else {
      std::vector<double> w(na);
      for (std::size_t a = 0; a < na; ++a) w[a] = std::exp(logw[a] - mx);
      normalize(w);
      const auto idx = systematic_resample(w, static_cast<std::size_t>(params.n_particles), state.rng);
      std::vector<AgentState> np;
      np.reserve(idx.size());
      for (auto i : idx) np.push_back(agent.particles[i]);
      agent.particles = std::move(np);
      agent.weights.assign(agent.particles.size(), 1.0 / static_cast<double>(agent.particles.size()));
    }
  }

  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> nu(M);
    for (std::size_t j = 0; j < M; ++j) nu[j] = da.nu[j][i];
    update_feature(state.features[legacy[i]], lik[i], nu, k, params, state.rng);
  }

  // New VRPs from measurements that no legacy feature explains. They are
  // placed relative to the PA estimate, so the PA must be localized first.
  bool pa_localized = false;
  if (pa_idx >= 0) pa_localized = std::sqrt(state.features[pa_idx].covariance().trace()) < params.agent_gate;
  if (pa_localized && params.mu_new > 0.0) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_int_distribution<std::size_t> pick(0, agent.particles.size() - 1);
    std::normal_distribution<double> noise(0.0, params.toa_sigma);
    for (std::size_t j = 0; j < M; ++j) {
      if (!(da.b[j][0] > params.birth_relevance)) continue;
      double sum_mu = 0.0;
      for (std::size_t i = 0; i < K; ++i) sum_mu += da.mu[i][j];
      const double r_new = new_ratio / (new_ratio + 1.0 + sum_mu);
      std::vector<Point2> particles;
      particles.reserve(params.n_particles);
      const std::size_t max_tries = 20 * static_cast<std::size_t>(params.n_particles);
      for (std::size_t tries = 0;
           tries < max_tries && particles.size() < static_cast<std::size_t>(params.n_particles); ++tries) {
        const Point2& p = agent.particles[pick(state.rng)].pos;
        const double th = angle(state.rng);
        const double rad = ranges[j] + noise(state.rng);
        if (!(rad > 0.0)) continue;
        const Point2 va = p + rad * Vec2(std::cos(th), std::sin(th));
        if ((va - pa_hat).norm() < 1e-6) continue;
        const Point2 v = vrp_from_pa_va(state.rp, pa_hat, va);
        if ((v - state.rp).norm() > params.roi_radius) continue;
        particles.push_back(v);
      }
      if (particles.size() < static_cast<std::size_t>(params.n_particles)) continue;
      FeatureBelief f = make_feature(FeatureKind::VRP, std::move(particles), r_new, state.n_anchors,
                                     0, state.next_feature_id++);
      f.born = state.t;
      state.features.push_back(std::move(f));
      ++info.births;
    }
  }

  // Confirmed VRPs stay re-acquirable by the other anchors.
  for (auto& f : state.features) {
    if (f.kind != FeatureKind::VRP || !(f.existence_prob() > params.detect_threshold)) continue;
    for (double& r : f.existence) r = std::max(r, params.reacquire_floor);
  }
  return info;
}

void step(SlamState& state, const MeasurementFrame& frame, const SlamParams& params) {
  if (static_cast<int>(frame.per_pa.size()) != state.n_anchors) {
    throw std::invalid_argument("step: frame anchor count differs from the state");
  }
  state.t = frame.t;
  const std::vector<FeatureBelief> before = state.features;
  predict_agent(state.agent, params, params.sample_period, state.rng);
  predict_features(state.features, params, state.rng);
  bool degenerate = false;
  for (int k = 0; k < state.n_anchors; ++k) {
    degenerate |= process_anchor(state, k, frame.per_pa[k], params).degenerate;
  }
  if (degenerate) ++state.degenerate_steps;
  // Each anchor pass resamples with 2-D roughening, adding about 2 rough^2
  // to the trace.
  const double slack = 2.0 * state.n_anchors * params.roughening * params.roughening;
  refine_step(before, state.features, params.sim_threshold, slack);
  std::erase_if(state.features, [&](const FeatureBelief& f) {
    return f.born < state.t && f.existence_prob() < params.prune_threshold;
  });
}

SlamEstimate estimate(const SlamState& state, const SlamParams& params) {
  SlamEstimate out;
  out.agent = state.agent.mean();
  for (const auto& f : state.features) {
    const double r = f.existence_prob();
    if (!(r > params.detect_threshold)) continue;
    out.features.push_back({f.kind, f.pa_index, f.feature_index, f.mean(), r, f.scalar_variance()});
  }
  return out;
}

}  // namespace hslam
