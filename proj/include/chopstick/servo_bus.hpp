#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chopstick/kinematics.hpp"
#include "chopstick/mechanism.hpp"

namespace chopstick::bus {

inline constexpr std::uint8_t kSync0 = 0xFE;
inline constexpr std::uint8_t kSync1 = 0xED;
inline constexpr std::uint8_t kBroadcastId = 254;
inline constexpr std::size_t kMaxPayload = 250;
/// sync(2) + id + len + opcode + crc(2)
inline constexpr std::size_t kFrameOverhead = 7;

enum class Opcode : std::uint8_t {
  SetGoalAngle = 0x01,   ///< i16 centi-degrees
  SetGoalTravel = 0x02,  ///< u16 centi-millimetres
  ReadState = 0x03,      ///< empty
  StateReply = 0x81,     ///< i16 position, i16 goal, centi-units of the servo
};

bool is_known_opcode(std::uint8_t op);

struct Frame {
  std::uint8_t id = 0;
  std::uint8_t opcode = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

/// CRC-16, polynomial 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);

/// Throws Error(PayloadTooLong) or Error(UnknownOpcode).
std::vector<std::uint8_t> encode(const Frame& frame);

enum class DiagnosticKind { CrcMismatch, TruncatedFrame, UnknownOpcode, BadLength };
std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::size_t offset = 0;  ///< index of the sync candidate in the input
};

struct DecodeResult {
  std::vector<Frame> frames;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::uint8_t> remainder;  ///< bytes that may begin a frame still arriving
};

/**
 * Scans for sync pairs and accepts frames with a valid length and CRC. A bad CRC
 * or length skips one byte and resynchronizes. A frame cut off by the end of input
 * is reported as TruncatedFrame and returned as the remainder.
 */
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Throws Error(InvalidParameter) when the value does not fit the wire type.
Frame set_goal_angle(std::uint8_t id, double degrees);
Frame set_goal_travel(std::uint8_t id, double mm);
Frame read_state(std::uint8_t id);
Frame state_reply(std::uint8_t id, double position, double goal);

/// Payload accessors; throw Error(InvalidParameter) on opcode or size mismatch.
double goal_angle_of(const Frame& frame);
double goal_travel_of(const Frame& frame);
struct StateValues {
  double position = 0.0;
  double goal = 0.0;
};
StateValues state_of(const Frame& frame);

/// Uppercase hex bytes separated by spaces, one frame per line.
std::string hex_dump(std::span<const std::uint8_t> bytes);
std::vector<std::vector<std::uint8_t>> parse_hex_dump(std::istream& in);

struct ServoSimState {
  double position = 0.0;  ///< degrees, or mm for the linear servo
  double goal = 0.0;
  double tau = 0.05;       ///< s
  double deadband = 0.25;  ///< same units as position
  Interval rom{-90.0, 90.0};
};

/**
 * First-order lag toward the goal pulled back by the deadband; no motion while the
 * goal lies within the deadband. Result clamped to the range of motion.
 * Throws Error(InvalidParameter) unless dt > 0.
 */
ServoSimState step_servo(const ServoSimState& state, double dt);

enum class ServoKind { Rotary, Linear };

/// Ids: 1 left pitch, 2 left yaw, 3 right pitch, 4 right yaw, 5 linear travel.
class LoopbackBus {
 public:
  struct Options {
    double tau = 0.05;
    double deadband = 0.25;         ///< degrees, rotary servos
    double linear_deadband = 0.0;   ///< mm
    double message_dt = 0.001;      ///< simulated time consumed by each received frame
  };

  explicit LoopbackBus(const DualConfig& config);
  LoopbackBus(const DualConfig& config, const Options& options);

  /// Feeds raw bytes; returns encoded replies in arrival order. Partial frames are
  /// kept until more bytes arrive.
  std::vector<std::uint8_t> transact(std::span<const std::uint8_t> bytes);

  /// Steps every servo by dt seconds.
  void advance(double dt);

  const ServoSimState& servo(std::uint8_t id) const;
  ServoKind kind(std::uint8_t id) const;
  double time() const { return time_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Frame> handle(const Frame& frame);
  void apply(std::uint8_t id, const Frame& frame);

  struct Servo {
    ServoKind kind;
    ServoSimState state;
  };
  std::map<std::uint8_t, Servo> servos_;
  std::vector<std::uint8_t> pending_;
  std::vector<Diagnostic> diagnostics_;
  Options options_;
  double time_ = 0.0;
};

struct BusDemoResult {
  TipPose target;
  PlatformCommand commanded;
  PlatformCommand settled;
  TipPose reached;
  double error = 0.0;  ///< mm
  double bound = 0.0;  ///< l_c * sin(2 * deadband), mm
  std::vector<std::vector<std::uint8_t>> sent;
  std::vector<std::vector<std::uint8_t>> received;
};

/**
 * Solves IK for the left platform, sends the goals over a loopback bus, lets the
 * servos settle for `settle_time`, reads the state back and runs forward kinematics
 * on the settled positions.
 */
BusDemoResult run_bus_demo(const DualConfig& config, const TipPose& target,
                           const LoopbackBus::Options& options = {}, double settle_time = 1.0);

}  // namespace chopstick::bus
