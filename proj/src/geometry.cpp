#include "chopstick/geometry.hpp"

#include <cmath>
#include <string>

#include "chopstick/error.hpp"
#include "chopstick/text.hpp"

namespace chopstick {

Eigen::Vector3d backend_mount_position(const SphericalDir& dir, double l_b) {
  if (!(l_b > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "backend mount offset must be positive");
  }
  const double s = std::sin(dir.phi);
  return {-l_b * s * std::sin(dir.psi), -l_b * s * std::cos(dir.psi), -l_b * std::cos(dir.phi)};
}

Circle2 sphere_plane_circle(const Sphere3& sphere, const AxisPlane& plane) {
  const auto& c = sphere.center;
  double dist = 0.0;
  Eigen::Vector2d center;
  switch (plane.normal) {
    case Axis::X:
      dist = c.x() - plane.offset;
      center = {c.y(), c.z()};
      break;
    case Axis::Y:
      dist = c.y() - plane.offset;
      center = {c.x(), c.z()};
      break;
    case Axis::Z:
      dist = c.z() - plane.offset;
      center = {c.x(), c.y()};
      break;
  }
  const double r2 = sphere.radius * sphere.radius - dist * dist;
  if (std::abs(dist) > sphere.radius) {
    throw Error(ErrorKind::NoIntersection,
                "sphere of radius " + text::format_double(sphere.radius) +
                    " is " + text::format_double(std::abs(dist)) + " mm from the plane");
  }
  return {center, std::sqrt(std::max(r2, 0.0))};
}

CircleIntersection circle_circle_intersect(const Circle2& c1, const Circle2& c2) {
  const Eigen::Vector2d delta = c2.center - c1.center;
  const double d = delta.norm();
  const double r1 = c1.radius;
  const double r2 = c2.radius;

  if (d <= 1e-12) throw Error(ErrorKind::Concentric, "circles are concentric");
  if (d > r1 + r2 + kTangentTolerance) {
    throw Error(ErrorKind::Disjoint, "circles are disjoint (d = " + text::format_double(d) + ")");
  }
  if (d < std::abs(r1 - r2) - kTangentTolerance) {
    throw Error(ErrorKind::Contained,
                "one circle contains the other (d = " + text::format_double(d) + ")");
  }

  CircleIntersection out;
  out.d = d;
  out.l = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
  out.h = std::sqrt(std::max(r1 * r1 - out.l * out.l, 0.0));

  const double a = out.l / d;
  const double b = out.h / d;
  const Eigen::Vector2d base = c1.center + a * delta;
  const Eigen::Vector2d offset{b * delta.y(), -b * delta.x()};
  out.points = {base + offset, base - offset};
  return out;
}

double horn_angle_deg(const Eigen::Vector2d& point, const Eigen::Vector2d& pivot) {
  const Eigen::Vector2d arm = point - pivot;
  return rad_to_deg(std::atan2(-arm.x(), -arm.y()));
}

Eigen::Vector2d horn_tip(const Eigen::Vector2d& pivot, double length, double angle_deg) {
  const double a = deg_to_rad(angle_deg);
  return pivot + length * Eigen::Vector2d{-std::sin(a), -std::cos(a)};
}

FeasiblePoint pick_feasible_intersection(const std::array<Eigen::Vector2d, 2>& points,
                                         const Eigen::Vector2d& pivot, const Interval& rom) {
  const FeasiblePoint a{points[0], horn_angle_deg(points[0], pivot)};
  const FeasiblePoint b{points[1], horn_angle_deg(points[1], pivot)};
  const bool a_ok = rom.contains(a.angle_deg);
  const bool b_ok = rom.contains(b.angle_deg);

  if (a_ok && b_ok) {
    const double ma = std::abs(a.angle_deg);
    const double mb = std::abs(b.angle_deg);
    if (ma != mb) return ma < mb ? a : b;
    return b.angle_deg < a.angle_deg ? b : a;
  }
  if (a_ok) return a;
  if (b_ok) return b;
  throw Error(ErrorKind::NoFeasibleSolution,
              "horn angles " + text::format_fixed(a.angle_deg, 3) + " and " +
                  text::format_fixed(b.angle_deg, 3) + " deg both lie outside the servo range");
}

}  // namespace chopstick
