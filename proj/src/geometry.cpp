#include "hslam/geometry.hpp"

#include <cmath>
#include <sstream>

namespace hslam {

void require_finite(const Point2& p, const char* name) {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) {
    std::ostringstream os;
    os << name << " has a non-finite coordinate";
    throw std::invalid_argument(os.str());
  }
}

namespace {

// Reflection of p across the line through `mid` with unit normal `n`.
Point2 reflect(const Point2& p, const Point2& mid, const Vec2& n) {
  return p - 2.0 * (p - mid).dot(n) * n;
}

}  // namespace

Vec2 surface_normal(const SurfaceFrame& frame) {
  require_finite(frame.rp, "rp");
  require_finite(frame.vrp, "vrp");
  const Vec2 diff = frame.vrp - frame.rp;
  const double len = diff.norm();
  if (len < kDegenerateTol) {
    throw DegenerateGeometryError("surface frame has rp == vrp; normal is undefined");
  }
  return diff / len;
}

Point2 va_from_pa(const SurfaceFrame& frame, const Point2& pa) {
  require_finite(pa, "pa");
  const Vec2 n = surface_normal(frame);
  return reflect(pa, 0.5 * (frame.vrp + frame.rp), n);
}

Point2 vrp_from_pa_va(const Point2& rp, const Point2& pa, const Point2& va) {
  require_finite(rp, "rp");
  require_finite(pa, "pa");
  require_finite(va, "va");
  const Vec2 diff = va - pa;
  const double len = diff.norm();
  if (len < kDegenerateTol) {
    throw DegenerateGeometryError("pa and va coincide; surface is undefined");
  }
  return reflect(rp, 0.5 * (pa + va), diff / len);
}

Point2 pa_from_vrp_va(const SurfaceFrame& frame, const Point2& va) {
  require_finite(va, "va");
  const Vec2 n = surface_normal(frame);
  return reflect(va, 0.5 * (frame.vrp + frame.rp), n);
}

Point2 rsp_position(const Point2& agent, double d, double phi) {
  require_finite(agent, "agent");
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw std::invalid_argument("rsp_position: distance must be positive");
  }
  if (!std::isfinite(phi)) throw std::invalid_argument("rsp_position: non-finite angle");
  return agent + d * Vec2(std::cos(phi), std::sin(phi));
}

Point2 vrp_from_two_rsps(const Point2& rp, const Point2& rsp1, const Point2& rsp2) {
  require_finite(rp, "rp");
  require_finite(rsp1, "rsp1");
  require_finite(rsp2, "rsp2");
  const double dx = rsp2.x() - rsp1.x();
  const double dy = rsp2.y() - rsp1.y();
  const double den = dx * dx + dy * dy;
  if (std::sqrt(den) < kDegenerateTol) {
    throw DegenerateGeometryError("reflection sample points coincide");
  }
  const double xr = rp.x();
  const double yr = rp.y();
  const double x1 = rsp1.x();
  const double y1 = rsp1.y();
  const double x = (xr * dx * dx - (xr - 2.0 * x1) * dy * dy + 2.0 * (yr - y1) * dx * dy) / den;
  const double y = (yr * dy * dy - (yr - 2.0 * y1) * dx * dx + 2.0 * (xr - x1) * dx * dy) / den;
  return {x, y};
}

Point2 mirror_across_line(const Point2& p, const Point2& a, const Point2& b) {
  require_finite(p, "p");
  require_finite(a, "a");
  require_finite(b, "b");
  const Vec2 dir = b - a;
  const double len = dir.norm();
  if (len < kDegenerateTol) throw DegenerateGeometryError("line endpoints coincide");
  const Vec2 n(-dir.y() / len, dir.x() / len);
  return reflect(p, a, n);
}

SurfaceFrame frame_from_line(const Point2& rp, const Point2& a, const Point2& b) {
  SurfaceFrame frame{rp, mirror_across_line(rp, a, b)};
  if ((frame.vrp - frame.rp).norm() < kDegenerateTol) {
    throw DegenerateGeometryError("reference point lies on the surface");
  }
  return frame;
}

}  // namespace hslam
