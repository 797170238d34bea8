// Python bindings for the geometry, active sensing, metrics and experiment
// harness. Points are 2-vectors (numpy arrays).

#include "hslam/active_sensing.hpp"
#include "hslam/config.hpp"
#include "hslam/geometry.hpp"
#include "hslam/harness.hpp"
#include "hslam/metrics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace hslam;

namespace {

py::dict run_to_dict(const RunResult& r) {
  py::list t, truth, est, err, mae, osp;
  for (const auto& s : r.steps) {
    t.append(s.t);
    truth.append(py::make_tuple(s.truth.x(), s.truth.y()));
    est.append(py::make_tuple(s.est.x(), s.est.y()));
    err.append(s.err);
    mae.append(s.mae_cum);
    osp.append(s.ospa);
  }
  py::dict d;
  d["seed"] = r.seed;
  d["mode"] = mode_name(r.mode);
  d["n_particles"] = r.n_particles;
  d["t"] = t;
  d["truth"] = truth;
  d["estimate"] = est;
  d["err"] = err;
  d["mae_cum"] = mae;
  d["ospa"] = osp;
  d["degenerate_steps"] = r.degenerate_steps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hybrid active/passive radio SLAM";

  py::register_exception<DegenerateGeometryError>(m, "DegenerateGeometryError", PyExc_ValueError);
  py::register_exception<NoPeakError>(m, "NoPeakError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // geometry
  m.def("va_from_pa", [](const Point2& rp, const Point2& vrp, const Point2& pa) {
    return va_from_pa(SurfaceFrame{rp, vrp}, pa);
  }, py::arg("rp"), py::arg("vrp"), py::arg("pa"));
  m.def("vrp_from_pa_va", &vrp_from_pa_va, py::arg("rp"), py::arg("pa"), py::arg("va"));
  m.def("vrp_from_two_rsps", &vrp_from_two_rsps, py::arg("rp"), py::arg("rsp1"), py::arg("rsp2"));
  m.def("mirror_across_line", &mirror_across_line, py::arg("p"), py::arg("a"), py::arg("b"));

  // active sensing
  py::class_<SignalConfig>(m, "SignalConfig")
      .def(py::init<>())
      .def_readwrite("carrier_freq", &SignalConfig::carrier_freq)
      .def_readwrite("subcarrier_spacing", &SignalConfig::subcarrier_spacing)
      .def_readwrite("num_subcarriers", &SignalConfig::num_subcarriers)
      .def_readwrite("noise_var", &SignalConfig::noise_var)
      .def_readwrite("rcs_gamma", &SignalConfig::rcs_gamma)
      .def_readwrite("rcs_eta", &SignalConfig::rcs_eta);
  py::class_<Rsp>(m, "Rsp")
      .def(py::init<double, double, double>(), py::arg("phi"), py::arg("d_mean"), py::arg("d_var"))
      .def_readwrite("phi", &Rsp::phi)
      .def_readwrite("d_mean", &Rsp::d_mean)
      .def_readwrite("d_var", &Rsp::d_var);
  py::class_<GaussianVrp>(m, "GaussianVrp")
      .def_readonly("mean", &GaussianVrp::mean)
      .def_readonly("cov", &GaussianVrp::cov);
  m.def("snr", &snr, py::arg("cfg"), py::arg("d"), py::arg("rcs"));
  m.def("noise_var_for_snr", &noise_var_for_snr, py::arg("cfg"), py::arg("d"), py::arg("rcs"),
        py::arg("snr_linear"));
  m.def("distance_crlb", &distance_crlb, py::arg("cfg"), py::arg("d"), py::arg("rcs"));
  m.def("exact_fisher_info", &exact_fisher_info, py::arg("cfg"), py::arg("d"), py::arg("rcs"));
  m.def("simulate_echo", &simulate_echo, py::arg("cfg"), py::arg("d"), py::arg("rcs"), py::arg("seed"));
  m.def("estimate_distance", [](const Echo& echo, const SignalConfig& cfg, double rcs) {
    const auto e = estimate_distance(echo, cfg, rcs);
    return py::make_tuple(e.d_hat, e.d_var);
  }, py::arg("echo"), py::arg("cfg"), py::arg("rcs"), "returns (d_hat, d_var)");
  m.def("vrp_from_rsps", [](const Point2& rp, const std::vector<Rsp>& rsps) {
    return vrp_from_rsps(rp, rsps, rp);
  }, py::arg("rp"), py::arg("rsps"));

  // metrics
  m.def("mae", &mae, py::arg("estimates"), py::arg("truth"));
  m.def("ospa", &ospa, py::arg("est"), py::arg("truth"), py::arg("cutoff") = 10.0, py::arg("p") = 1.0);

  // experiments
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("n_beams", &ExperimentConfig::n_beams)
      .def_property_readonly("n_particles", [](const ExperimentConfig& c) { return c.slam.n_particles; })
      .def_property_readonly("pas", [](const ExperimentConfig& c) { return c.scenario.pas; })
      .def_property_readonly("waypoints", [](const ExperimentConfig& c) { return c.scenario.waypoints; });
  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("origin") = "<config>");
  m.def("run", [](const ExperimentConfig& cfg, const std::string& mode, std::uint64_t seed, int particles,
                  int steps) {
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run_single(cfg, parse_mode(mode), seed, RunOptions{particles, steps});
    }
    return run_to_dict(r);
  }, py::arg("cfg"), py::arg("mode") = "hybrid", py::arg("seed") = 1, py::arg("particles") = 0,
     py::arg("steps") = 0, "one run; returns a dict of per-step series");
  m.def("run_experiment", [](const ExperimentConfig& cfg, const std::string& mode,
                             const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                             int particles, int steps, int threads) {
    std::vector<RunResult> runs;
    {
      py::gil_scoped_release release;
      runs = run_experiment(cfg, parse_mode(mode), seeds, out, RunOptions{particles, steps}, threads);
    }
    py::list l;
    for (const auto& r : runs) l.append(run_to_dict(r));
    return l;
  }, py::arg("cfg"), py::arg("mode"), py::arg("seeds"), py::arg("out"), py::arg("particles") = 0,
     py::arg("steps") = 0, py::arg("threads") = 0, "runs every seed and writes the result files");
}
