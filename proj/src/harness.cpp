#include "hslam/harness.hpp"

#include "hslam/metrics.hpp"
#include "hslam/pa_init.hpp"
#include "hslam/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace hslam {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::vector<Point2> estimate_vrp_set(const std::vector<FeatureEstimate>& feats) {
  std::vector<Point2> out;
  for (const auto& f : feats) out.push_back(f.pos);
  return out;
}

std::vector<Point2> estimate_va_set(const std::vector<FeatureEstimate>& feats, const Point2& rp) {
  std::vector<Point2> out;
  for (const auto& pa : feats) {
    if (pa.kind != FeatureKind::PA) continue;
    out.push_back(pa.pos);
    for (const auto& v : feats) {
      if (v.kind != FeatureKind::VRP || (v.pos - rp).norm() < kDegenerateTol) continue;
      out.push_back(va_from_pa(SurfaceFrame{rp, v.pos}, pa.pos));
    }
  }
  return out;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "hybrid") return Mode::Hybrid;
  if (name == "passive-only") return Mode::PassiveOnly;
  if (name == "active-only") return Mode::ActiveOnly;
  throw std::invalid_argument("invalid mode '" + name + "' (expected hybrid, passive-only or active-only)");
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Hybrid: return "hybrid";
    case Mode::PassiveOnly: return "passive-only";
    case Mode::ActiveOnly: return "active-only";
  }
  return "?";
}

VisibilityTracker::VisibilityTracker(const Scenario& scn, int window)
    : scn_(scn),
      window_(window),
      gt_(ground_truth_features(scn)),
      wall_last_(scn.walls.size(), -1),
      va_last_(scn.pas.size(), std::vector<int>(scn.walls.size(), -1)) {}

void VisibilityTracker::advance(const Point2& agent) {
  ++step_;
  for (std::size_t k = 0; k < scn_.pas.size(); ++k) {
    for (const auto& p : visible_paths(scn_, agent, k)) {
      if (p.wall < 0) continue;
      wall_last_[p.wall] = step_;
      va_last_[k][p.wall] = step_;
    }
  }
}

std::vector<Point2> VisibilityTracker::truth_vrp_set() const {
  std::vector<Point2> out(scn_.pas.begin(), scn_.pas.end());
  for (std::size_t l = 0; l < wall_last_.size(); ++l) {
    if (recent(wall_last_[l]) && !gt_.empty()) out.push_back(gt_[0].vrps[l]);
  }
  return out;
}

std::vector<Point2> VisibilityTracker::truth_va_set() const {
  std::vector<Point2> out;
  for (std::size_t k = 0; k < gt_.size(); ++k) {
    out.push_back(gt_[k].pa);
    for (std::size_t l = 0; l < wall_last_.size(); ++l) {
      if (recent(va_last_[k][l])) out.push_back(gt_[k].vas[l]);
    }
  }
  return out;
}

std::vector<GaussianVrp> resolve_priors(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.vrp_priors) return *cfg.vrp_priors;
  const auto scan = generate_active_scan_labeled(cfg.scenario, cfg.signal, cfg.scenario.rp(),
                                                 cfg.n_beams, derive_seed(seed, {3}));
  return vrp_priors_from_scan(cfg.scenario.rp(), scan);
}

RunResult run_single(const ExperimentConfig& cfg, Mode mode, std::uint64_t seed,
                     const RunOptions& opts) {
  SlamParams params = cfg.slam;
  if (opts.particles > 0) params.n_particles = opts.particles;
  const auto traj = generate_trajectory(cfg.scenario);
  std::size_t n_steps = traj.size();
  if (opts.steps > 0) n_steps = std::min<std::size_t>(n_steps, static_cast<std::size_t>(opts.steps));

  RunResult run;
  run.seed = seed;
  run.mode = mode;
  run.n_particles = params.n_particles;
  if (n_steps == 0) return run;

  const Point2 rp = cfg.scenario.rp();
  const std::uint64_t meas_seed = derive_seed(seed, {1});
  if (mode != Mode::PassiveOnly) run.priors = resolve_priors(cfg, seed);

  MeasurementFrame frame1 = generate_measurements(cfg.scenario, cfg.noise, traj[0].pos, 1, meas_seed);
  const double v0 = cfg.scenario.step_length / cfg.scenario.sample_period;
  SlamState state = initialize_state(rp, frame1, mode == Mode::PassiveOnly ? std::vector<GaussianVrp>{} : run.priors,
                                     params, v0, derive_seed(seed, {2}));
  for (const auto& f : state.features) {
    if (f.kind == FeatureKind::PA) run.init_clouds.push_back({f.pa_index, f.particles});
  }

  // Active-only keeps the t = 1 VRP estimates and dead-reckons the agent.
  std::vector<FeatureEstimate> active_feats;
  if (mode == Mode::ActiveOnly) {
    std::erase_if(state.features, [](const FeatureBelief& f) { return f.kind == FeatureKind::PA; });
    for (const auto& f : state.features) {
      active_feats.push_back({f.kind, f.pa_index, f.feature_index, f.mean(), f.existence_prob(),
                              f.scalar_variance()});
    }
  }

  VisibilityTracker vis(cfg.scenario, cfg.metrics.truth_window);
  double err_sum = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const int t = static_cast<int>(i) + 1;
    if (t > 1) {
      if (mode == Mode::ActiveOnly) {
        state.t = t;
        predict_agent(state.agent, params, params.sample_period, state.rng);
      } else {
        step(state, generate_measurements(cfg.scenario, cfg.noise, traj[i].pos, t, meas_seed), params);
      }
    }
    vis.advance(traj[i].pos);
    StepRecord rec;
    rec.t = t;
    rec.truth = traj[i].pos;
    if (mode == Mode::ActiveOnly) {
      rec.est = state.agent.mean();
      rec.features = active_feats;
    } else {
      const SlamEstimate est = estimate(state, params);
      rec.est = est.agent;
      rec.features = est.features;
    }
    rec.err = (rec.est - rec.truth).norm();
    err_sum += rec.err;
    rec.mae_cum = err_sum / t;
    rec.ospa = ospa(estimate_vrp_set(rec.features), vis.truth_vrp_set(), cfg.metrics.ospa_cutoff,
                    cfg.metrics.ospa_order);
    rec.ospa_va = ospa(estimate_va_set(rec.features, rp), vis.truth_va_set(), cfg.metrics.ospa_cutoff,
                       cfg.metrics.ospa_order);
    run.steps.push_back(std::move(rec));
  }
  run.degenerate_steps = state.degenerate_steps;
  return run;
}

void emit_results(const RunResult& run, const ExperimentConfig& cfg, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  auto traj = open_out(dir / "trajectory.csv");
  traj << "t,true_x,true_y,est_x,est_y,err\n";
  auto feats = open_out(dir / "features.csv");
  feats << "t,pa_index,feature_index,kind,est_x,est_y,existence,var\n";
  auto met = open_out(dir / "metrics.csv");
  met << "t,mae_cum,ospa\n";
  auto met_va = open_out(dir / "metrics_va.csv");
  met_va << "t,mae_cum,ospa\n";
  for (const auto& s : run.steps) {
    traj << s.t << ',' << fmt(s.truth.x()) << ',' << fmt(s.truth.y()) << ',' << fmt(s.est.x()) << ','
         << fmt(s.est.y()) << ',' << fmt(s.err) << '\n';
    for (const auto& f : s.features) {
      feats << s.t << ',' << f.pa_index << ',' << f.feature_index << ',' << kind_name(f.kind) << ','
            << fmt(f.pos.x()) << ',' << fmt(f.pos.y()) << ',' << fmt(f.existence) << ',' << fmt(f.var)
            << '\n';
    }
    met << s.t << ',' << fmt(s.mae_cum) << ',' << fmt(s.ospa) << '\n';
    met_va << s.t << ',' << fmt(s.mae_cum) << ',' << fmt(s.ospa_va) << '\n';
  }
  auto init = open_out(dir / "init_particles.csv");
  init << "pa_index,x,y\n";
  for (const auto& c : run.init_clouds) {
    for (const auto& p : c.particles) init << c.pa_index << ',' << fmt(p.x()) << ',' << fmt(p.y()) << '\n';
  }

  nlohmann::ordered_json summary;
  summary["seed"] = run.seed;
  summary["mode"] = mode_name(run.mode);
  summary["n_particles"] = run.n_particles;
  summary["steps"] = run.steps.size();
  if (!run.steps.empty()) {
    summary["final_mae"] = run.steps.back().mae_cum;
    summary["final_err"] = run.steps.back().err;
    summary["final_ospa"] = run.steps.back().ospa;
    summary["final_detected_features"] = run.steps.back().features.size();
  }
  summary["degenerate_steps"] = run.degenerate_steps;
  summary["config"] = cfg.source;
  auto js = open_out(dir / "summary.json");
  js << summary.dump(2) << '\n';
  if (!js) throw std::runtime_error("write failed: " + (dir / "summary.json").string());
}

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs) {
  std::size_t len = 0;
  for (const auto& r : runs) len = std::max(len, r.steps.size());
  std::vector<AggregateRow> rows;
  for (std::size_t i = 0; i < len; ++i) {
    AggregateRow row;
    row.t = static_cast<int>(i) + 1;
    double se = 0, se2 = 0, sm = 0, sm2 = 0, so = 0, so2 = 0;
    for (const auto& r : runs) {
      if (i >= r.steps.size()) continue;
      const auto& s = r.steps[i];
      ++row.n;
      se += s.err;
      se2 += s.err * s.err;
      sm += s.mae_cum;
      sm2 += s.mae_cum * s.mae_cum;
      so += s.ospa;
      so2 += s.ospa * s.ospa;
    }
    const double n = row.n;
    auto sd = [n](double s, double s2) {
      return n > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1))) : 0.0;
    };
    row.err_mean = se / n;
    row.err_std = sd(se, se2);
    row.mae_mean = sm / n;
    row.mae_std = sd(sm, sm2);
    row.ospa_mean = so / n;
    row.ospa_std = sd(so, so2);
    rows.push_back(row);
  }
  return rows;
}

void write_aggregate(const std::vector<AggregateRow>& rows, const fs::path& file) {
  auto out = open_out(file);
  out << "t,n,err_mean,err_std,mae_cum_mean,mae_cum_std,ospa_mean,ospa_std\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.n << ',' << fmt(r.err_mean) << ',' << fmt(r.err_std) << ',' << fmt(r.mae_mean)
        << ',' << fmt(r.mae_std) << ',' << fmt(r.ospa_mean) << ',' << fmt(r.ospa_std) << '\n';
  }
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, Mode mode,
                                      const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                                      const RunOptions& opts, int threads) {
  if (seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
  std::vector<RunResult> runs(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        runs[i] = run_single(cfg, mode, seeds[i], opts);
        emit_results(runs[i], cfg, out_dir / ("seed_" + std::to_string(seeds[i])));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  int n_threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min<int>(n_threads, static_cast<int>(seeds.size()));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  const auto rows = aggregate(runs);
  write_aggregate(rows, out_dir / "metrics_aggregate.csv");
  nlohmann::ordered_json summary;
  summary["mode"] = mode_name(mode);
  summary["seeds"] = seeds;
  if (!rows.empty()) {
    summary["final_mae_mean"] = rows.back().mae_mean;
    summary["final_ospa_mean"] = rows.back().ospa_mean;
  }
  summary["config"] = cfg.source;
  auto js = open_out(out_dir / "summary.json");
  js << summary.dump(2) << '\n';
  return runs;
}

}  // namespace hslam
