#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hslam/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hslam;

namespace {

Scenario floor_plan() {
  Scenario s;
  s.walls = {{Point2(0, 0), Point2(0, 40)},   {Point2(0, 40), Point2(50, 40)},
             {Point2(80, 0), Point2(80, 60)}, {Point2(0, 0), Point2(80, 0)},
             {Point2(50, 60), Point2(80, 60)}};
  s.pas = {Point2(30, 30), Point2(60, 8)};
  s.waypoints = {Point2(10, 15), Point2(70, 15), Point2(70, 28), Point2(15, 28), Point2(10, 15)};
  s.step_length = 0.5;
  s.sample_period = 1.0;
  return s;
}

// point reflected across the line through a, b (independent of the library)
Point2 reflect(const Point2& p, const Point2& a, const Point2& b) {
  const Vec2 d = (b - a).normalized();
  const Point2 foot = a + d * d.dot(p - a);
  return 2 * foot - p;
}

double dist_to_segment(const Point2& p, const Wall& w) {
  const Vec2 d = w.b - w.a;
  const double t = std::clamp(d.dot(p - w.a) / d.squaredNorm(), 0.0, 1.0);
  return (p - (w.a + t * d)).norm();
}

}  // namespace

TEST_CASE("trajectory interpolation") {
  Scenario s;
  s.pas = {Point2(5, 5)};
  s.waypoints = {Point2(0, 0), Point2(1, 0)};
  s.step_length = 0.5;
  s.sample_period = 2.0;
  const auto tr = generate_trajectory(s);
  REQUIRE(tr.size() == 3);
  CHECK((tr[1].pos - Point2(0.5, 0)).norm() < 1e-12);
  CHECK((tr[2].pos - Point2(1, 0)).norm() < 1e-12);
  CHECK((tr[1].vel - Vec2(0.25, 0)).norm() < 1e-12);

  const auto loop = generate_trajectory(floor_plan());
  CHECK(loop.size() == 285);  // 142 m of path at 0.5 m
  CHECK((loop.back().pos - loop.front().pos).norm() < 1e-9);
  for (std::size_t i = 1; i < loop.size(); ++i) {
    REQUIRE((loop[i].pos - loop[i - 1].pos).norm() <= 0.5 + 1e-9);
  }

  s.waypoints = {Point2(0, 0), Point2(0, 0), Point2(1, 1)};
  CHECK_THROWS(generate_trajectory(s));
}

TEST_CASE("ground truth: vrp - rp parallel to va - pa") {
  const auto s = floor_plan();
  const auto gt = ground_truth_features(s);
  REQUIRE(gt.size() == 2);
  CHECK((gt[0].vrps[4] - Point2(10, 105)).norm() < 1e-9);
  for (const auto& f : gt) {
    for (std::size_t l = 0; l < s.walls.size(); ++l) {
      const Vec2 a = f.vrps[l] - s.rp(), b = f.vas[l] - f.pa;
      CHECK(std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-9 * a.norm() * b.norm());
      CHECK((f.vas[l] - reflect(f.pa, s.walls[l].a, s.walls[l].b)).norm() < 1e-9);
    }
  }
}

TEST_CASE("visibility") {
  const auto s = floor_plan();
  // the fifth wall is hidden from rp behind the y = 40 wall
  CHECK_FALSE(visible_single_bounce(s.rp(), s.pas[0], s.walls[4], s.walls).has_value());
  const auto len = visible_single_bounce(s.rp(), s.pas[0], s.walls[0], s.walls);
  REQUIRE(len.has_value());
  CHECK(*len == doctest::Approx((s.rp() - reflect(s.pas[0], s.walls[0].a, s.walls[0].b)).norm()));
  CHECK(segment_blocked(Point2(10, 15), Point2(10, 50), s.walls));
  CHECK_FALSE(segment_blocked(Point2(10, 15), Point2(20, 20), s.walls));
  const auto paths = visible_paths(s, s.rp(), 0);
  REQUIRE_FALSE(paths.empty());
  CHECK(paths.front().wall == -1);
}

TEST_CASE("noiseless TOAs are LOS or VA distances") {
  const auto s = floor_plan();
  NoiseModel n;
  n.toa_sigma = 1e-12;
  n.p_detect = 1.0;
  n.mu_false = 0.0;
  const auto gt = ground_truth_features(s);
  const auto tr = generate_trajectory(s);
  for (std::size_t i = 0; i < tr.size(); i += 7) {
    const auto f = generate_measurements(s, n, tr[i].pos, static_cast<int>(i) + 1, 42);
    for (std::size_t k = 0; k < s.pas.size(); ++k) {
      REQUIRE_FALSE(f.per_pa[k].empty());
      for (double toa : f.per_pa[k]) {
        const double r = toa * kSpeedOfLight;
        bool hit = std::abs(r - (tr[i].pos - s.pas[k]).norm()) < 1e-6;
        for (const auto& va : gt[k].vas) hit = hit || std::abs(r - (tr[i].pos - va).norm()) < 1e-6;
        REQUIRE(hit);
      }
    }
  }
}

TEST_CASE("measurement noise, detection and clutter statistics") {
  const auto s = floor_plan();
  NoiseModel n;
  n.toa_sigma = 0.1;
  n.p_detect = 0.8;
  n.mu_false = 2.0;
  n.roi_radius = 180.0;
  const Point2 agent(40, 20);
  const double los = (agent - s.pas[1]).norm();
  std::size_t n_frames = 4000, n_los = 0, n_far = 0;
  double sum = 0.0, sq = 0.0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto f = generate_measurements(s, n, agent, 1, 1000 + t);
    for (double toa : f.per_pa[1]) {
      const double r = toa * kSpeedOfLight;
      REQUIRE(r < 2 * n.roi_radius + 1.0);
      if (std::abs(r - los) < 0.5) {
        ++n_los;
        sum += r - los;
        sq += (r - los) * (r - los);
      }
      // nothing true beyond 200 m here: what is there is clutter
      if (r > 200.0) ++n_far;
    }
  }
  // LOS kept with p_detect (a clutter return may land in the window: tiny)
  CHECK(static_cast<double>(n_los) / n_frames == doctest::Approx(0.8).epsilon(0.04));
  CHECK(std::sqrt(sq / n_los) == doctest::Approx(0.1).epsilon(0.05));
  CHECK(std::abs(sum / n_los) < 0.01);
  // uniform clutter over (0, 360) m: 160/360 of mu_false lands beyond 200 m
  CHECK(static_cast<double>(n_far) / n_frames == doctest::Approx(2.0 * 160.0 / 360.0).epsilon(0.05));

  const auto a = generate_measurements(s, n, agent, 3, 77);
  const auto b = generate_measurements(s, n, agent, 3, 77);
  CHECK(a.per_pa == b.per_pa);
  CHECK(generate_measurements(s, n, agent, 3, 78).per_pa != a.per_pa);
}

TEST_CASE("active scan") {
  Scenario box;
  box.walls = {{Point2(-5, -5), Point2(5, -5)}, {Point2(5, -5), Point2(5, 5)},
               {Point2(5, 5), Point2(-5, 5)},   {Point2(-5, 5), Point2(-5, -5)}};
  box.pas = {Point2(1, 1)};
  box.waypoints = {Point2(0, 0), Point2(1, 0)};
  SignalConfig quiet;
  quiet.noise_var = 0.0;
  const auto rsps = generate_active_scan(box, quiet, Point2(0, 0), 4, 1);
  REQUIRE(rsps.size() == 4);
  for (const auto& r : rsps) CHECK(r.d_mean == doctest::Approx(5.0).epsilon(1e-5));

  const auto s = floor_plan();
  const auto scan = generate_active_scan_labeled(s, quiet, s.rp(), 72, 1);
  for (const auto& r : scan) {
    const Point2 p = rsp_position(s.rp(), r.rsp.d_mean, r.rsp.phi);
    CHECK(dist_to_segment(p, s.walls[r.wall]) < 1e-4);
    CHECK(r.wall != 4);
  }
  SignalConfig sig;
  sig.noise_var = 5.78e-12;
  const auto priors = vrp_priors_from_scan(s.rp(), generate_active_scan_labeled(s, sig, s.rp(), 72, 5));
  REQUIRE(priors.size() == 4);
  const auto gt = ground_truth_features(s);
  for (const auto& g : priors) {
    double best = 1e9;
    for (int l = 0; l < 4; ++l) best = std::min(best, (g.mean - gt[0].vrps[l]).norm());
    CHECK(best < 3.0 + 3.0 * std::sqrt(g.cov.trace()));
  }
}

TEST_CASE("validation") {
  auto s = floor_plan();
  CHECK_NOTHROW(s.validate());
  s.pas.clear();
  CHECK_THROWS(s.validate());
  NoiseModel n;
  n.p_detect = 1.5;
  CHECK_THROWS(n.validate());
  n = NoiseModel{};
  CHECK(n.false_density() == doctest::Approx(1.0 / 360.0));
}
