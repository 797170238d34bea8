#pragma once

// Mirror-image relations between physical anchors (PA), virtual anchors (VA),
// the reference point (RP) and virtual reference points (VRP).
//
// A reflective surface is never stored as line coefficients. It is the pair
// (rp, vrp): the surface is the perpendicular bisector of that segment.

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace hslam {

using Point2 = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kSpeedOfLight = 299792458.0;

/// Two points closer than this are treated as coincident.
inline constexpr double kDegenerateTol = 1e-9;

class DegenerateGeometryError : public std::domain_error {
 public:
  explicit DegenerateGeometryError(const std::string& what) : std::domain_error(what) {}
};

struct SurfaceFrame {
  Point2 rp;
  Point2 vrp;
};

/// Throws std::invalid_argument if p has a NaN or infinite coordinate.
void require_finite(const Point2& p, const char* name);

/// Unit normal (vrp - rp) / |vrp - rp|.
Vec2 surface_normal(const SurfaceFrame& frame);

/// VA of `pa`: its mirror image across the surface of `frame`.
Point2 va_from_pa(const SurfaceFrame& frame, const Point2& pa);

/// VRP of the surface that maps `pa` onto `va` (mirror of rp across the
/// perpendicular bisector of pa-va).
Point2 vrp_from_pa_va(const Point2& rp, const Point2& pa, const Point2& va);

/// PA whose mirror image across the surface of `frame` is `va`.
Point2 pa_from_vrp_va(const SurfaceFrame& frame, const Point2& va);

/// Reflection sample point hit by a beam of angle `phi` at range `d`.
Point2 rsp_position(const Point2& agent, double d, double phi);

/// VRP of the line through two reflection sample points, from the
/// perpendicularity and collinearity conditions solved in closed form.
Point2 vrp_from_two_rsps(const Point2& rp, const Point2& rsp1, const Point2& rsp2);

/// Mirror of p across the infinite line through a and b.
Point2 mirror_across_line(const Point2& p, const Point2& a, const Point2& b);

/// Surface frame of the line through a and b as seen from rp.
SurfaceFrame frame_from_line(const Point2& rp, const Point2& a, const Point2& b);

}  // namespace hslam
