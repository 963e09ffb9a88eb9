#pragma once

#include <Eigen/Core>

#include "chopstick/geometry.hpp"
#include "chopstick/mechanism.hpp"

namespace chopstick {

/// Intermediate construction for one servo axis, kept for inspection.
struct AxisConstruction {
  Eigen::Vector3d mount = Eigen::Vector3d::Zero();  ///< backend linkage mount
  Circle2 mount_circle;                             ///< linkage sphere cut by the servo plane
  Circle2 horn_circle;
  CircleIntersection intersection;
  FeasiblePoint chosen;
};

struct IkSolution {
  PlatformCommand command;
  SphericalDir dir;
  double z_calc = 0.0;
  AxisConstruction pitch;
  AxisConstruction yaw;
};

/**
 * Closed-form inverse kinematics of one platform.
 *
 * The tip direction follows from (x, y) alone; the platform travel absorbs the
 * remaining Z. Each servo is then solved in its own plane by cutting the sphere of
 * radius l_j around its backend mount with the servo plane and intersecting the
 * resulting circle with the horn circle.
 *
 * Throws Error with kind OutOfReach, TravelExceeded, LinkageInfeasible or RomViolated.
 */
IkSolution inverse_kinematics(const MechanismParams& params, const TipPose& target);

struct FkSolution {
  TipPose tip;
  SphericalDir dir;
  double residual = 0.0;  ///< max |linkage length error|, mm
  int converged_seeds = 0;
};

/**
 * Forward kinematics by damped Newton iteration on the two linkage-length residuals.
 *
 * Seeds come from a 16x16 grid over the admissible (phi, psi) cone. Throws
 * Error(NoConvergence) when no seed converges and Error(MultipleBranches) when
 * seeds settle on distinct solutions inside the cone.
 */
FkSolution solve_forward(const MechanismParams& params, const PlatformCommand& command);

inline TipPose forward_kinematics(const MechanismParams& params, const PlatformCommand& command) {
  return solve_forward(params, command).tip;
}

/// Leadscrew revolutions for a platform travel; throws Error(TravelExceeded).
double travel_to_servo_rotation(const MechanismParams& params, double d_p);

/// Horn tip positions in the platform frame for the given horn angles.
Eigen::Vector3d pitch_horn_tip(const MechanismParams& params, double delta_p_deg);
Eigen::Vector3d yaw_horn_tip(const MechanismParams& params, double delta_y_deg);

/// Linkage length errors (pitch, yaw) in mm for a chopstick direction and command.
Eigen::Vector2d linkage_residuals(const MechanismParams& params, const SphericalDir& dir,
                                  const PlatformCommand& command);

}  // namespace chopstick
