#pragma once

// Experiment orchestration and result files.

#include "hslam/config.hpp"
#include "hslam/slam_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hslam {

enum class Mode { Hybrid, PassiveOnly, ActiveOnly };

Mode parse_mode(const std::string& name);
const char* mode_name(Mode mode);

struct RunOptions {
  int particles = 0;  // 0 keeps the configured count
  int steps = 0;      // 0 runs the whole trajectory
};

struct StepRecord {
  int t = 0;
  Point2 truth = Point2::Zero();
  Point2 est = Point2::Zero();
  double err = 0.0;
  double mae_cum = 0.0;
  double ospa = 0.0;     // PAs + VRPs
  double ospa_va = 0.0;  // PAs + VAs
  std::vector<FeatureEstimate> features;
};

struct InitCloud {
  int pa_index = 0;
  std::vector<Point2> particles;
};

struct RunResult {
  std::uint64_t seed = 0;
  Mode mode = Mode::Hybrid;
  std::vector<StepRecord> steps;
  std::vector<InitCloud> init_clouds;  // PA particle clouds at t = 1
  std::vector<GaussianVrp> priors;     // VRP priors used at t = 1
  int degenerate_steps = 0;
  int n_particles = 0;
};

/// Ground-truth map at the current step: the PAs plus the surfaces (VRPs) or
/// images (VAs) that had a single-bounce path to some PA within the last
/// `window` steps. window <= 0 keeps everything ever seen.
struct VisibilityTracker {
  explicit VisibilityTracker(const Scenario& scn, int window = 0);
  void advance(const Point2& agent);
  std::vector<Point2> truth_vrp_set() const;  // PAs followed by seen VRPs
  std::vector<Point2> truth_va_set() const;   // PAs followed by seen VAs
  bool wall_seen(std::size_t l) const { return recent(wall_last_[l]); }

 private:
  bool recent(int last) const { return last >= 0 && (window_ <= 0 || step_ - last < window_); }

  const Scenario& scn_;
  int window_;
  int step_ = -1;
  std::vector<PaFeatures> gt_;
  std::vector<int> wall_last_;
  std::vector<std::vector<int>> va_last_;
};

/// VRP priors used at t = 1 in hybrid and active-only modes: the configured
/// priors, else an active scan at the reference point.
std::vector<GaussianVrp> resolve_priors(const ExperimentConfig& cfg, std::uint64_t seed);

RunResult run_single(const ExperimentConfig& cfg, Mode mode, std::uint64_t seed,
                     const RunOptions& opts = {});

/// trajectory.csv, features.csv, metrics.csv, metrics_va.csv, init_particles.csv, summary.json.
void emit_results(const RunResult& run, const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct AggregateRow {
  int t = 0;
  int n = 0;
  double err_mean = 0.0, err_std = 0.0;
  double mae_mean = 0.0, mae_std = 0.0;
  double ospa_mean = 0.0, ospa_std = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs);
void write_aggregate(const std::vector<AggregateRow>& rows, const std::filesystem::path& file);

/// Runs every seed on a worker pool (each run single-threaded) and writes
/// seed_<n>/ per run plus metrics_aggregate.csv and summary.json in out_dir.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, Mode mode,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::filesystem::path& out_dir, const RunOptions& opts = {},
                                      int threads = 0);

}  // namespace hslam
