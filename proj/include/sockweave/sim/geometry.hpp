#pragma once

#include <Eigen/Core>

#include <vector>

namespace sockweave::sim {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

/// Even-odd crossing test; points exactly on an edge may land either side.
bool point_in_polygon(const Polygon& poly, const Vec2& p);

struct BoundaryPoint {
  Vec2 point;
  Vec2 outward;     // unit normal pointing out of the polygon
  double distance;  // >= 0
};

/// Closest point on the polygon boundary (polygon must be counter-clockwise).
BoundaryPoint closest_boundary_point(const Polygon& poly, const Vec2& p);

/// Negative inside, positive outside.
double signed_distance(const Polygon& poly, const Vec2& p);

double polygon_area(const Polygon& poly);

}  // namespace sockweave::sim
