#include "hslam/config.hpp"

#include <fstream>
#include <sstream>

namespace hslam {

namespace {

using nlohmann::json;

struct Ctx {
  std::string origin;

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw ConfigError(origin + ": field '" + field + "': " + msg);
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
    return *it;
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }

  int integer(const json& v, const std::string& field) const {
    if (!v.is_number_integer()) fail(field, "expected an integer");
    return v.get<int>();
  }

  Point2 point(const json& v, const std::string& field) const {
    if (!v.is_array() || v.size() != 2) fail(field, "expected [x, y]");
    return {number(v[0], field + "[0]"), number(v[1], field + "[1]")};
  }

  std::vector<Point2> points(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected a list of [x, y]");
    std::vector<Point2> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(point(v[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  // Optional numeric override.
  template <class T>
  void opt(const json& obj, const char* key, const std::string& path, T& dst) const {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string field = path + "." + key;
    if constexpr (std::is_integral_v<T>) {
      dst = integer(*it, field);
    } else {
      dst = number(*it, field);
    }
  }
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": syntax error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
  Ctx c{origin};
  if (!doc.is_object()) c.fail("<root>", "expected an object");

  ExperimentConfig cfg;
  cfg.source = doc;

  const json& walls = c.require(doc, "walls", "");
  if (!walls.is_array()) c.fail("walls", "expected a list of [ax, ay, bx, by]");
  for (std::size_t i = 0; i < walls.size(); ++i) {
    const std::string f = "walls[" + std::to_string(i) + "]";
    const json& w = walls[i];
    if (!w.is_array() || w.size() != 4) c.fail(f, "expected [ax, ay, bx, by]");
    Wall wall{{c.number(w[0], f), c.number(w[1], f)}, {c.number(w[2], f), c.number(w[3], f)}};
    if ((wall.a - wall.b).norm() < kDegenerateTol) c.fail(f, "endpoints coincide");
    cfg.scenario.walls.push_back(wall);
  }
  cfg.scenario.pas = c.points(c.require(doc, "pas", ""), "pas");
  if (cfg.scenario.pas.empty()) c.fail("pas", "at least one PA is required");
  cfg.scenario.waypoints = c.points(c.require(doc, "waypoints", ""), "waypoints");
  if (cfg.scenario.waypoints.size() < 2) c.fail("waypoints", "at least two waypoints are required");
  cfg.scenario.step_length = c.number(c.require(doc, "step_length", ""), "step_length");
  if (!(cfg.scenario.step_length > 0.0)) c.fail("step_length", "must be positive");
  cfg.scenario.sample_period = c.number(c.require(doc, "sample_period", ""), "sample_period");
  if (!(cfg.scenario.sample_period > 0.0)) c.fail("sample_period", "must be positive");

  const json& noise = c.require(doc, "noise", "");
  cfg.noise.toa_sigma = c.number(c.require(noise, "toa_sigma", "noise"), "noise.toa_sigma");
  cfg.noise.p_detect = c.number(c.require(noise, "p_detect", "noise"), "noise.p_detect");
  cfg.noise.mu_false = c.number(c.require(noise, "mu_false", "noise"), "noise.mu_false");
  cfg.noise.roi_radius = c.number(c.require(noise, "roi_radius", "noise"), "noise.roi_radius");
  if (!(cfg.noise.toa_sigma > 0.0)) c.fail("noise.toa_sigma", "must be positive");
  if (!(cfg.noise.p_detect > 0.0 && cfg.noise.p_detect <= 1.0)) c.fail("noise.p_detect", "must be in (0, 1]");
  if (!(cfg.noise.mu_false >= 0.0)) c.fail("noise.mu_false", "must be nonnegative");
  if (!(cfg.noise.roi_radius > 0.0)) c.fail("noise.roi_radius", "must be positive");

  const json& sig = c.require(doc, "signal", "");
  cfg.signal.carrier_freq = c.number(c.require(sig, "carrier_freq", "signal"), "signal.carrier_freq");
  cfg.signal.subcarrier_spacing =
      c.number(c.require(sig, "subcarrier_spacing", "signal"), "signal.subcarrier_spacing");
  cfg.signal.num_subcarriers =
      c.integer(c.require(sig, "num_subcarriers", "signal"), "signal.num_subcarriers");
  cfg.signal.noise_var = c.number(c.require(sig, "noise_var", "signal"), "signal.noise_var");
  cfg.signal.rcs_gamma = c.number(c.require(sig, "rcs_gamma", "signal"), "signal.rcs_gamma");
  cfg.signal.rcs_eta = c.number(c.require(sig, "rcs_eta", "signal"), "signal.rcs_eta");
  try {
    cfg.signal.validate();
  } catch (const std::invalid_argument& e) {
    c.fail("signal", e.what());
  }

  cfg.n_beams = c.integer(c.require(doc, "n_beams", ""), "n_beams");
  if (cfg.n_beams < 1) c.fail("n_beams", "must be at least 1");

  if (auto it = doc.find("vrp_priors"); it != doc.end()) {
    if (!it->is_array()) c.fail("vrp_priors", "expected a list");
    std::vector<GaussianVrp> priors;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string f = "vrp_priors[" + std::to_string(i) + "]";
      const json& p = (*it)[i];
      GaussianVrp g;
      g.mean = c.point(c.require(p, "mean", f), f + ".mean");
      if (p.contains("var")) {
        const double v = c.number(p["var"], f + ".var");
        if (!(v >= 0.0)) c.fail(f + ".var", "must be nonnegative");
        g.cov = v * Mat2::Identity();
      } else if (p.contains("cov")) {
        const json& m = p["cov"];
        if (!m.is_array() || m.size() != 2) c.fail(f + ".cov", "expected [[a, b], [c, d]]");
        const Point2 r0 = c.point(m[0], f + ".cov[0]");
        const Point2 r1 = c.point(m[1], f + ".cov[1]");
        g.cov << r0.x(), r0.y(), r1.x(), r1.y();
      } else {
        c.fail(f, "needs 'var' or 'cov'");
      }
      priors.push_back(g);
    }
    cfg.vrp_priors = std::move(priors);
  }

  if (auto it = doc.find("slam"); it != doc.end()) {
    const json& s = *it;
    if (!s.is_object()) c.fail("slam", "expected an object");
    auto& p = cfg.slam;
    c.opt(s, "p_detect", "slam", p.p_detect);
    c.opt(s, "p_survive", "slam", p.p_survive);
    c.opt(s, "mu_false", "slam", p.mu_false);
    c.opt(s, "mu_new", "slam", p.mu_new);
    c.opt(s, "prune_threshold", "slam", p.prune_threshold);
    c.opt(s, "detect_threshold", "slam", p.detect_threshold);
    c.opt(s, "sim_threshold", "slam", p.sim_threshold);
    c.opt(s, "n_particles", "slam", p.n_particles);
    c.opt(s, "driving_var_agent", "slam", p.driving_var_agent);
    c.opt(s, "driving_var_feature", "slam", p.driving_var_feature);
    c.opt(s, "da_iterations", "slam", p.da_iterations);
    c.opt(s, "agent_gate", "slam", p.agent_gate);
    c.opt(s, "roughening", "slam", p.roughening);
    c.opt(s, "birth_relevance", "slam", p.birth_relevance);
    c.opt(s, "reacquire_floor", "slam", p.reacquire_floor);
  }
  cfg.slam.toa_sigma = cfg.noise.toa_sigma;
  cfg.slam.roi_radius = cfg.noise.roi_radius;
  cfg.slam.sample_period = cfg.scenario.sample_period;
  try {
    cfg.slam.validate();
  } catch (const std::invalid_argument& e) {
    c.fail("slam", e.what());
  }

  if (auto it = doc.find("metrics"); it != doc.end()) {
    c.opt(*it, "ospa_cutoff", "metrics", cfg.metrics.ospa_cutoff);
    c.opt(*it, "ospa_order", "metrics", cfg.metrics.ospa_order);
    c.opt(*it, "truth_window", "metrics", cfg.metrics.truth_window);
    if (!(cfg.metrics.ospa_cutoff > 0.0)) c.fail("metrics.ospa_cutoff", "must be positive");
    if (!(cfg.metrics.ospa_order >= 1.0)) c.fail("metrics.ospa_order", "must be >= 1");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace hslam
