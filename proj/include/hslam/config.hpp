#pragma once

// JSON experiment configuration.

#include "hslam/active_sensing.hpp"
#include "hslam/scenario.hpp"
#include "hslam/slam_engine.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hslam {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct MetricsConfig {
  double ospa_cutoff = 10.0;
  double ospa_order = 1.0;
  // steps a surface stays in the truth map after its last single-bounce path; <= 0: forever
  int truth_window = 3;
};

struct ExperimentConfig {
  Scenario scenario;
  NoiseModel noise;
  SignalConfig signal;
  int n_beams = 36;
  std::optional<std::vector<GaussianVrp>> vrp_priors;
  SlamParams slam;
  MetricsConfig metrics;
  nlohmann::json source;  // the parsed document, echoed into summaries
};

/// Parses a config document. `origin` names it in diagnostics. Syntax errors
/// report line and column; semantic errors report the field path.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace hslam
