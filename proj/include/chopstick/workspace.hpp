#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "chopstick/error.hpp"
#include "chopstick/mechanism.hpp"

namespace chopstick {

/// Axis-aligned sampling region in a platform frame.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  double volume() const { return (max - min).prod(); }
};

/// +-40 mm in x and y, 35 mm of Z starting at the zero-pose tip height.
Box default_workspace_box(const MechanismParams& params);

struct WorkspaceSample {
  TipPose target;
  bool reachable = false;
  std::optional<ErrorKind> failure;  ///< set exactly when !reachable
};

/// Seeded uniform samples of `box`, each classified by running inverse kinematics.
std::vector<WorkspaceSample> sample_workspace(const MechanismParams& params, std::size_t n,
                                              const Box& box, std::uint64_t seed);

/// Reachable targets of a sample list.
std::vector<Eigen::Vector3d> reachable_points(std::span<const WorkspaceSample> samples);

/// CSV with header `x,y,z,reachable,failure`.
void write_samples_csv(std::ostream& out, std::span<const WorkspaceSample> samples);
std::vector<WorkspaceSample> read_samples_csv(std::istream& in);

/// Triangulated convex polytope with outward-facing triangles.
struct ConvexHull3 {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;  ///< counter-clockwise seen from outside
  double volume = 0.0;

  /// Largest signed plane distance over all faces; <= 0 inside.
  double signed_distance(const Eigen::Vector3d& p) const;
  std::size_t edge_count() const { return faces.size() * 3 / 2; }
};

/// Plane thickness used for visibility and containment decisions, mm.
inline constexpr double kHullTolerance = 1e-9;

/**
 * Incremental convex hull. Starts from the tetrahedron spanned by extreme points
 * and repeatedly adds the furthest outside point of some face, replacing the
 * faces it sees by a fan over the horizon.
 *
 * Throws Error(Degenerate) for fewer than four affinely independent points.
 */
ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> points);

/// Object File Format: `OFF`, counts line, vertex lines, `3 i j k` face lines.
void write_off(std::ostream& out, const ConvexHull3& hull);

/// Servo play, modeled as uniform angle error on each rotary servo.
struct BacklashModel {
  double epsilon_servo = 0.25;   ///< degrees, half-width; fitted, not measured
  double epsilon_linear = 0.0;   ///< mm, half-width on platform travel
  std::uint64_t seed = 0;
};

struct PosePair {
  TipPose commanded;
  TipPose observed;
};

/**
 * For each target: solve IK, perturb both horn angles by independent uniform draws
 * in +-epsilon_servo (and travel by +-epsilon_linear), and report the forward
 * kinematics of the perturbed command as the observed pose.
 */
std::vector<PosePair> simulate_observed(const MechanismParams& params,
                                        std::span<const TipPose> targets,
                                        const BacklashModel& model);

}  // namespace chopstick
