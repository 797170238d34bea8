// Command line driver: hslam run --config <path> --mode <mode> --seeds <n|list> --out <dir>

#include "hslam/config.hpp"
#include "hslam/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <sstream>

namespace {

// "5" means seeds 1..5; "3,7,9" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (text.find(',') == std::string::npos) {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(text, &pos);
    if (pos != text.size() || n == 0) throw std::invalid_argument("bad --seeds value '" + text + "'");
    for (std::uint64_t s = 1; s <= n; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    out.push_back(std::stoull(item, &pos));
    if (pos != item.size()) throw std::invalid_argument("bad seed '" + item + "'");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid active/passive radio SLAM simulator"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run an experiment over one or more seeds");
  std::string config, mode = "hybrid", seeds = "1", out;
  int particles = 0, steps = 0, threads = 0;
  run->add_option("--config", config, "scenario config (JSON)")->required();
  run->add_option("--mode", mode, "hybrid | passive-only | active-only");
  run->add_option("--seeds", seeds, "seed count n (seeds 1..n) or comma separated list");
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--particles", particles, "override particle count");
  run->add_option("--steps", steps, "truncate the trajectory to this many slots");
  run->add_option("--threads", threads, "worker threads (default: hardware concurrency)");
  CLI11_PARSE(app, argc, argv);

  try {
    const hslam::Mode m = hslam::parse_mode(mode);
    const auto cfg = hslam::load_config(config);
    const auto seed_list = parse_seeds(seeds);
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = hslam::run_experiment(cfg, m, seed_list, out, {particles, steps}, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& r : runs) {
      if (r.steps.empty()) continue;
      std::printf("seed %llu: steps %zu final_mae %.3f final_ospa %.3f\n",
                  static_cast<unsigned long long>(r.seed), r.steps.size(), r.steps.back().mae_cum,
                  r.steps.back().ospa);
    }
    std::fprintf(stderr, "%zu run(s) in %.1f s, results in %s\n", runs.size(), secs, out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
