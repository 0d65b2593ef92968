#include "sockweave/sim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sockweave::sim {

bool point_in_polygon(const Polygon& poly, const Vec2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

BoundaryPoint closest_boundary_point(const Polygon& poly, const Vec2& p) {
  BoundaryPoint best{p, Vec2::UnitY(), std::numeric_limits<double>::infinity()};
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2 e = b - a;
    const double len2 = e.squaredNorm();
    if (len2 <= 0.0) continue;
    const double t = std::clamp((p - a).dot(e) / len2, 0.0, 1.0);
    const Vec2 q = a + t * e;
    const double d = (p - q).norm();
    if (d < best.distance) {
      // Counter-clockwise winding: the outward normal is the edge rotated clockwise.
      best = {q, Vec2(e.y(), -e.x()).normalized(), d};
    }
  }
  return best;
}

double signed_distance(const Polygon& poly, const Vec2& p) {
  const double d = closest_boundary_point(poly, p).distance;
  return point_in_polygon(poly, p) ? -d : d;
}

double polygon_area(const Polygon& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

}  // namespace sockweave::sim
