#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace chopstick {

struct FtSample {
  double t = 0.0;                                    ///< s
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   ///< N
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  ///< mNm
  bool quantized = false;
  bool saturated = false;
};

struct SensorModel {
  double full_scale_force = 25.0;    ///< +- N
  double full_scale_torque = 125.0;  ///< +- mNm
  int resolution_bits = 10;
  double rate_hz = 1000.0;
  double noise_std = 0.02;    ///< N, synthetic
  double drift_rate = 0.001;  ///< N/s, synthetic

  /// Throws Error(InvalidParameter).
  void validate() const;
  double force_lsb() const;
  double torque_lsb() const;
};

/**
 * Maps a value onto the uniform grid k * lsb, lsb = 2 * full_scale / 2^bits, with
 * k in [-(2^(bits-1) - 1), 2^(bits-1)]. Zero and +full_scale are levels; -full_scale
 * is one level short. Values off the grid clamp to the end levels and set `saturated`.
 */
double quantize_channel(double value, double full_scale, int bits, bool& saturated);

FtSample quantize(const SensorModel& model, const FtSample& sample);

struct Bias {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

/// Per-channel mean over samples with t < t_first + window. Throws Error(WindowTooShort).
Bias tare(std::span<const FtSample> stream, double window_s, std::size_t min_samples = 10);
std::vector<FtSample> subtract_bias(std::span<const FtSample> stream, const Bias& bias);

struct ContactEvent {
  double onset = 0.0;
  std::optional<double> release;  ///< empty when the stream ends in contact
};

struct ContactThresholds {
  double threshold = 0.15;  ///< N
  double hysteresis = 0.05; ///< N
  int smoothing = 8;         ///< causal moving-average length in samples, 1 disables
};

/// Crossings of the smoothed force magnitude with hysteresis. Throws
/// Error(InvalidParameter) unless threshold > hysteresis > 0 and smoothing >= 1.
std::vector<ContactEvent> detect_contact(std::span<const FtSample> stream,
                                         const ContactThresholds& thresholds = {});

/// Commanded stick separation at the sensor rate.
struct GripCycle {
  std::vector<double> separation;  ///< mm, one entry per sample
  double k = 1.0;                  ///< N/mm
  double rest_width = 20.0;        ///< mm
  double lever_arm = 40.0;         ///< mm from sensor to contact, for torque
};

struct GripProtocol {
  double open_margin = 5.0;   ///< mm above rest width while open
  double penetration = 4.0;   ///< mm below rest width while closed
  double open_hold = 0.5;     ///< s; the first one doubles as the tare window
  double close_time = 0.5;
  double closed_hold = 0.5;
  double open_time = 0.5;
  int cycles = 8;
};

/// Separation series for repeated open-close-open cycles, ending with an open hold.
std::vector<double> grip_closure(const GripProtocol& protocol, double rest_width, double rate_hz);

/**
 * Linear-spring contact along x: F_x = k * max(0, rest_width - separation), plus
 * gaussian noise on every force channel and linear drift on x. Torque about y is
 * the noisy x force times the lever arm. Every sample is quantized.
 */
std::vector<FtSample> simulate_grip_cycle(const SensorModel& model, const GripCycle& cycle,
                                          std::uint64_t seed);

struct StiffnessEstimate {
  double k_hat = 0.0;      ///< N/mm
  double r_squared = 0.0;
  double contact_onset = 0.0;  ///< s
  std::size_t samples = 0;     ///< points in the regression
};

struct StiffnessOptions {
  double tare_window = 0.2;  ///< s
  ContactThresholds contact;
};

/**
 * Tares on the leading window, finds contact intervals, and regresses tared F_x on
 * the commanded separation over all non-saturated contact samples; k_hat is minus
 * the slope. Throws Error(NoContact) when no contact interval has two samples.
 */
StiffnessEstimate estimate_stiffness(std::span<const FtSample> stream,
                                     std::span<const double> closure,
                                     const StiffnessOptions& options = {});

/// Same regression restricted to each contact event separately.
std::vector<StiffnessEstimate> estimate_stiffness_per_event(std::span<const FtSample> stream,
                                                            std::span<const double> closure,
                                                            const StiffnessOptions& options = {});

struct Material {
  std::string name;
  double k = 1.0;  ///< N/mm
};

/// Five synthetic materials, soft to firm.
std::vector<Material> default_materials();

/// CSV `name,k`; extra columns ignored.
std::vector<Material> read_materials_csv(std::istream& in);

struct MaterialResult {
  Material material;
  std::size_t events = 0;
  std::vector<double> k_hat;  ///< one per contact event
  double k_hat_mean = 0.0;
  double peak_force = 0.0;    ///< N, largest tared |F_x|
};

/// Runs the grip protocol on each material with seed + index and estimates stiffness.
std::vector<MaterialResult> run_material_study(const SensorModel& model,
                                               std::span<const Material> materials,
                                               const GripProtocol& protocol, double rest_width,
                                               std::uint64_t seed);

/// Count of adjacent pairs whose mean k_hat is not strictly increasing, taking
/// materials in order of true k.
int ordering_inversions(std::span<const MaterialResult> results);

/// `t,fx,fy,fz,tx,ty,tz,flags` where flags is 1 for quantized plus 2 for saturated.
void write_ft_samples_csv(std::ostream& out, std::span<const FtSample> stream);
std::vector<FtSample> read_ft_samples_csv(std::istream& in);

/// `t,separation`.
void write_closure_csv(std::ostream& out, std::span<const double> closure, double rate_hz);
std::vector<double> read_closure_csv(std::istream& in);

}  // namespace chopstick
