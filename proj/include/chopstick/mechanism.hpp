#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace chopstick {

/// Closed interval [min, max].
struct Interval {
  double min = 0.0;
  double max = 0.0;

  bool contains(double v) const { return v >= min && v <= max; }
  double width() const { return max - min; }
  bool operator==(const Interval&) const = default;
};

/**
 * Geometric constants of one chopstick platform.
 *
 * The reference frame sits at the spherical pivot of the chopstick. The pitch
 * servo horn rotates in the plane x = 0 (coordinates (y, z)), the yaw servo horn
 * in the plane y = 0 (coordinates (x, z)). All lengths are millimeters and all
 * angles degrees.
 */
struct MechanismParams {
  double l_c = 162.0;   ///< chopstick length, pivot to tip
  double l_j = 32.5;    ///< ball-joint linkage length
  double l_p = 28.0;    ///< pitch horn length, also the pitch backend-mount offset
  double l_y = 32.0;    ///< yaw horn length, also the yaw backend-mount offset
  double z_offset = 0.0;
  Eigen::Vector2d pitch_pivot{-32.5, 0.0};  ///< (y, z) in the plane x = 0
  Eigen::Vector2d yaw_pivot{-32.5, 0.0};    ///< (x, z) in the plane y = 0
  Interval servo_rom{-90.0, 90.0};
  Interval linear_travel{0.0, 35.0};
  double leadscrew_lead = 2.0;  ///< mm per revolution
  /// Largest chopstick tilt (polar angle) the forward solver searches.
  double fk_max_tilt_deg = 45.0;

  /// Throws Error(InvalidParameter) naming the first violated field.
  void validate() const;

  bool operator==(const MechanismParams& other) const;
};

/// Two independently actuated platforms mounted side by side.
struct DualConfig {
  MechanismParams left;
  MechanismParams right;
  double baseline = 100.0;  ///< distance between the two pivot axes
  bool mirror = true;       ///< right platform frame reflected in x

  void validate() const;
  bool operator==(const DualConfig& other) const;
};

/// Chopstick tip position in a platform frame. z is the commanded platform Z.
struct TipPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static TipPose from(const Eigen::Vector3d& p) { return {p.x(), p.y(), p.z()}; }
  double radial() const;
  bool operator==(const TipPose&) const = default;
};

/// Servo-space state of one platform.
struct PlatformCommand {
  double delta_p = 0.0;  ///< pitch horn angle, degrees
  double delta_y = 0.0;  ///< yaw horn angle, degrees
  double d_p = 0.0;      ///< platform travel, mm
  bool operator==(const PlatformCommand&) const = default;
};

/// Published platform dimensions plus defaults for the unpublished offsets.
MechanismParams default_params();
DualConfig default_dual_config();

/// Commanded Z of the tip at the zero pose (Phi = 0, d_p = 0).
double zero_pose_z(const MechanismParams& params);

/// Parses the flat `key = value` configuration format described in docs/config.md.
DualConfig load_config(std::string_view document);
DualConfig load_config_file(const std::filesystem::path& path);

/// Writes every field explicitly; load_config(serialize_config(c)) == c.
std::string serialize_config(const DualConfig& config);

}  // namespace chopstick
