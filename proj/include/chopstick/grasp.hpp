#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "chopstick/error.hpp"
#include "chopstick/kinematics.hpp"
#include "chopstick/mechanism.hpp"

namespace chopstick {

struct FoodItem {
  std::string name;
  double mass_g = 0.0;
  Eigen::Vector3d dims = Eigen::Vector3d::Zero();  ///< L, W, H in mm; W is the pinched width
  double mu = 0.5;                                 ///< tip friction coefficient
  double k = 1.0;                                  ///< contact stiffness, N/mm

  double width() const { return dims.y(); }
  /// Throws Error(InvalidParameter).
  void validate() const;
};

/// CSV `name,mass_g,L,W,H,mu,k`.
std::vector<FoodItem> read_food_items_csv(std::istream& in);

/**
 * End-effector frame: x runs from the left pivot to the right pivot, which sit at
 * x = -baseline/2 and +baseline/2; y and z follow the platform frames, so z is a
 * commanded platform Z. The right platform frame is reflected in x when mirrored.
 */
Eigen::Vector3d to_platform_frame(const DualConfig& config, bool right, const Eigen::Vector3d& ee);
Eigen::Vector3d from_platform_frame(const DualConfig& config, bool right, const Eigen::Vector3d& p);

struct PinchPlan {
  Eigen::Vector3d left_ee, right_ee;  ///< tip targets in the end-effector frame
  TipPose left_tip, right_tip;        ///< the same targets in each platform frame
  PlatformCommand left_command, right_command;
  double grip_force = 0.0;            ///< N
  double penetration = 0.0;           ///< mm per side
  Eigen::Vector3d grasp_axis = Eigen::Vector3d::UnitX();

  double tip_separation() const { return (right_ee - left_ee).norm(); }
};

/**
 * Places the tips symmetrically about `center` along the grasp axis, each pressed
 * grip_force / stiffness into the object, and solves both platforms.
 *
 * Errors: ObjectTooWide (width >= baseline), UnreachablePinch (names the platform),
 * InvalidParameter (nonpositive width or stiffness, negative force, tips crossing).
 */
PinchPlan plan_pinch(const DualConfig& config, const Eigen::Vector3d& center, double width,
                     double grip_force, double stiffness);

/// Trapezoidal speed profile over a distance; triangular when the cruise speed is not reached.
struct TrapezoidProfile {
  double distance = 0.0;
  double peak_speed = 0.0;
  double accel = 0.0;
  double ramp_time = 0.0;
  double cruise_time = 0.0;

  double duration() const { return 2.0 * ramp_time + cruise_time; }
  double position(double t) const;
  double speed(double t) const;
  double acceleration(double t) const;
};

/// Throws Error(InfeasibleProfile) for nonpositive distance, speed or acceleration.
TrapezoidProfile make_trapezoid(double distance, double max_speed, double accel);

enum class Phase { Grasp, Lift, Translate, Rotate };
std::string_view to_string(Phase phase);

struct Segment {
  Phase phase = Phase::Grasp;
  std::string label;
  double t0 = 0.0;
  double duration = 0.0;
  Eigen::Vector3d start = Eigen::Vector3d::Zero();      ///< mm, world
  Eigen::Vector3d direction = Eigen::Vector3d::Zero();  ///< unit translation direction
  Eigen::Quaterniond orientation0 = Eigen::Quaterniond::Identity();
  Eigen::Vector3d rotation_axis = Eigen::Vector3d::Zero();  ///< body axis, for Rotate
  std::optional<TrapezoidProfile> profile;  ///< mm or degrees; empty for a hold
};

struct Waypoint {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Phase phase = Phase::Grasp;
  std::string label;
};

struct TrialProtocol {
  double lift = 250.0;       ///< mm
  double translate = 200.0;  ///< mm, one way
  double speed = 200.0;      ///< mm/s
  int cycles = 3;            ///< there-and-back translations
  double rotate_y = 90.0;    ///< degrees about body Y
  double rotate_z = 90.0;    ///< degrees about body Z
  double rotation_speed = 90.0;   ///< deg/s
  double rotation_accel = 180.0;  ///< deg/s^2
  double grasp_hold = 0.5;        ///< s
};

struct TrialTrajectory {
  std::vector<Segment> segments;

  double duration() const;
  Waypoint at(double t) const;
  /// Segment boundaries plus uniform steps of dt; times strictly increasing.
  std::vector<Waypoint> sample(double dt) const;
  /// Largest translational acceleration in a phase, mm/s^2.
  double peak_acceleration(Phase phase) const;
};

/**
 * Grasp hold, lift, `cycles` there-and-back translations along world x, then the
 * two body rotations at the lift apex. `accel` is in m/s^2.
 */
TrialTrajectory build_trial_trajectory(const TrialProtocol& protocol, double accel);

inline constexpr double kGravity = 9810.0;  ///< mm/s^2

struct PhaseVerdict {
  Phase phase = Phase::Grasp;
  double required = 0.0;   ///< N
  double available = 0.0;  ///< N
  bool hold = false;
};

struct SlipPrediction {
  std::vector<PhaseVerdict> phases;
  bool rotation_hold = false;     ///< grasp, lift and rotate phases all hold
  bool translation_hold = false;  ///< grasp, lift and translate phases all hold
  Phase limiting = Phase::Grasp;  ///< phase with the smallest available/required ratio
  double margin = 0.0;            ///< that ratio
};

/**
 * Two-contact Coulomb model. Available restraint is 2 * mu * grip force. Required
 * restraint is m * g while grasping, m * (g + |a_peak|) for lift and translation,
 * and the largest m * |g perpendicular to the grasp axis| over a 1 degree sweep of
 * each rotation. A phase holds when available >= safety * required.
 */
SlipPrediction predict_slip(const FoodItem& item, const PinchPlan& plan,
                            const TrialTrajectory& trajectory, double g = kGravity,
                            double safety = 1.0);

struct TrialSettings {
  Eigen::Vector3d center{0.0, 0.0, 175.0};  ///< end-effector frame, mm
  double grip_force = 2.0;                  ///< N
  std::map<std::string, double> grip_overrides;
  double accel = 1.0;                       ///< m/s^2
  TrialProtocol protocol;
};

struct TrialRow {
  FoodItem item;
  double grip_force = 0.0;
  std::optional<SlipPrediction> prediction;
  std::optional<ErrorKind> error;
  std::string error_message;
};

/// Plans and predicts every item; planning failures are recorded per row.
std::vector<TrialRow> run_trial_suite(const DualConfig& config, std::span<const FoodItem> items,
                                      const TrialSettings& settings = {});

std::string render_trial_csv(std::span<const TrialRow> rows);
std::string render_trial_json(std::span<const TrialRow> rows);

}  // namespace chopstick
