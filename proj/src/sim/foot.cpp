#include "sockweave/sim/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sockweave::sim {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Rounds the outline near the toe tip; 1 from one tip radius on.
double tip_rounding(double u, double toe_radius) {
  if (u <= 0.0) return 0.0;
  if (u >= toe_radius) return 1.0;
  const double t = 1.0 - u / toe_radius;
  return std::sqrt(std::max(0.0, 1.0 - t * t));
}

}  // namespace

Vec2 FootGeom::axis() const {
  const double a = angle_deg * kDegToRad;
  return {std::cos(a), std::sin(a)};
}

Vec2 FootGeom::normal() const {
  const Vec2 a = axis();
  return {-a.y(), a.x()};
}

Vec2 FootGeom::toe() const { return ankle_anchor - length * axis(); }

Vec2 FootGeom::to_frame(const Vec2& p) const {
  const Vec2 d = p - toe();
  return {d.dot(axis()), d.dot(normal())};
}

Vec2 FootGeom::from_frame(double u, double w) const { return toe() + u * axis() + w * normal(); }

double FootGeom::top_half_width(double u) const {
  if (u < 0.0 || u > length + leg_length) return 0.0;
  const double s = length / 2.5;
  const double ankle = 0.45 * s;
  const double base = toe_radius + (ankle - toe_radius) * std::clamp(u / length, 0.0, 1.0);
  return base * tip_rounding(u, toe_radius);
}

double FootGeom::sole_half_width(double u) const {
  if (u < 0.0 || u > length + leg_length) return 0.0;
  const double s = length / 2.5;
  const double sole = 0.28 * s;
  const double base = toe_radius + (sole - toe_radius) * std::clamp(u / (0.6 * length), 0.0, 1.0);
  const double spread = 0.18 * length;
  const double x = (u - heel_center()) / spread;
  const double bump = heel_radius * std::max(0.0, 1.0 - x * x);
  return (base + bump) * tip_rounding(u, toe_radius);
}

double FootGeom::cross_section_profile(const Vec2& p) const {
  const Vec2 f = to_frame(p);
  const double r = f.y() >= 0.0 ? top_half_width(f.x()) : sole_half_width(f.x());
  if (r <= 0.0) return 1.0;
  const double t = std::abs(f.y()) / r;
  if (t >= 1.0) return 1.0;
  return 1.0 - std::sqrt(1.0 - t * t);
}

FootGeom make_foot(double angle_deg, double length, const SimConfig& config) {
  FootGeom f;
  f.angle_deg = angle_deg;
  f.length = length;
  const double s = length / 2.5;
  f.toe_radius = 0.25 * s;
  f.heel_radius = 0.22 * s;
  f.ankle_anchor = config.ankle_anchor;
  f.leg_length = config.leg_length;
  return f;
}

Polygon foot_polygon(const FootGeom& foot) {
  const double end = foot.length + foot.leg_length;
  const int samples = static_cast<int>(std::ceil(end / 0.05));
  Polygon poly;
  poly.push_back(foot.from_frame(0.0, 0.0));
  // Sole side toward the leg, then dorsal side back to the tip: counter-clockwise.
  for (int k = 1; k <= samples; ++k) {
    const double u = end * k / samples;
    poly.push_back(foot.from_frame(u, -foot.sole_half_width(u)));
  }
  for (int k = samples; k >= 1; --k) {
    const double u = end * k / samples;
    poly.push_back(foot.from_frame(u, foot.top_half_width(u)));
  }
  return poly;
}

}  // namespace sockweave::sim
