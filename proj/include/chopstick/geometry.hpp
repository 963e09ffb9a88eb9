#pragma once

#include <array>
#include <numbers>

#include <Eigen/Core>

#include "chopstick/mechanism.hpp"

namespace chopstick {

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Chopstick direction in spherical coordinates (radians). phi is the polar angle
/// measured from the -z axis, psi the azimuth measured from +y toward +x.
struct SphericalDir {
  double phi = 0.0;
  double psi = 0.0;
};

/// Circle in a coordinate plane; center is (horizontal, vertical).
struct Circle2 {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

struct Sphere3 {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

enum class Axis { X, Y, Z };

/// The plane {p : p[normal] = offset}. In-plane coordinates are (y, z) for X,
/// (x, z) for Y and (x, y) for Z.
struct AxisPlane {
  Axis normal = Axis::X;
  double offset = 0.0;
};

/// Distance within which two circles are treated as touching.
inline constexpr double kTangentTolerance = 1e-9;

/// Position of a linkage mount on the chopstick backend at distance l_b from the pivot.
Eigen::Vector3d backend_mount_position(const SphericalDir& dir, double l_b);

/// Intersection of a sphere with a coordinate plane, in the plane's 2D coordinates.
/// Throws Error(NoIntersection) when the sphere does not reach the plane.
Circle2 sphere_plane_circle(const Sphere3& sphere, const AxisPlane& plane);

struct CircleIntersection {
  double d = 0.0;  ///< center distance
  double l = 0.0;  ///< distance from c1's center to the radical line
  double h = 0.0;  ///< half chord length, >= 0
  /// Points with the sign pairs (+h, -h) and (-h, +h) on the two coordinates.
  std::array<Eigen::Vector2d, 2> points;
};

/// Throws Error(Concentric | Disjoint | Contained) when no proper intersection exists.
CircleIntersection circle_circle_intersect(const Circle2& c1, const Circle2& c2);

/**
 * Signed servo horn angle in degrees of a horn tip at `point` rotating about `pivot`.
 *
 * Zero means the horn hangs straight down (-vertical); positive angles swing the
 * tip toward -horizontal. For a horn below its axis this equals
 * atan((h - h_pivot) / (v - v_pivot)).
 */
double horn_angle_deg(const Eigen::Vector2d& point, const Eigen::Vector2d& pivot);

/// Inverse of horn_angle_deg for a horn of the given length.
Eigen::Vector2d horn_tip(const Eigen::Vector2d& pivot, double length, double angle_deg);

struct FeasiblePoint {
  Eigen::Vector2d point;
  double angle_deg = 0.0;
};

/**
 * Chooses the intersection point whose horn angle lies in `rom`. When both do,
 * the smaller |angle| wins and an exact tie goes to the negative angle.
 * Throws Error(NoFeasibleSolution) when neither does.
 */
FeasiblePoint pick_feasible_intersection(const std::array<Eigen::Vector2d, 2>& points,
                                         const Eigen::Vector2d& pivot, const Interval& rom);

}  // namespace chopstick
