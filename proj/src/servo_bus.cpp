#include "chopstick/servo_bus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <sstream>

#include <boost/crc.hpp>

#include "chopstick/error.hpp"
#include "chopstick/text.hpp"

namespace chopstick::bus {

bool is_known_opcode(std::uint8_t op) {
  switch (static_cast<Opcode>(op)) {
    case Opcode::SetGoalAngle:
    case Opcode::SetGoalTravel:
    case Opcode::ReadState:
    case Opcode::StateReply:
      return true;
  }
  return false;
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
  boost::crc_optimal<16, 0x1021, 0xFFFF, 0, false, false> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<std::uint8_t> encode(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) {
    throw Error(ErrorKind::PayloadTooLong, "payload of " + std::to_string(frame.payload.size()) +
                                               " bytes exceeds " + std::to_string(kMaxPayload));
  }
  if (!is_known_opcode(frame.opcode)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "unknown opcode 0x%02X", frame.opcode);
    throw Error(ErrorKind::UnknownOpcode, buf);
  }
  std::vector<std::uint8_t> out;
  out.reserve(frame.payload.size() + kFrameOverhead);
  out.push_back(kSync0);
  out.push_back(kSync1);
  out.push_back(frame.id);
  out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
  out.push_back(frame.opcode);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  const std::uint16_t crc = crc16(std::span(out).subspan(2));
  out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  return out;
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::CrcMismatch: return "CrcMismatch";
    case DiagnosticKind::TruncatedFrame: return "TruncatedFrame";
    case DiagnosticKind::UnknownOpcode: return "UnknownOpcode";
    case DiagnosticKind::BadLength: return "BadLength";
  }
  return "Unknown";
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  DecodeResult result;
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    if (bytes[i] != kSync0) {
      ++i;
      continue;
    }
    if (i + 1 == n) {
      result.remainder.assign(bytes.begin() + i, bytes.end());
      return result;
    }
    if (bytes[i + 1] != kSync1) {
      ++i;
      continue;
    }
    if (n - i < 5) {
      result.remainder.assign(bytes.begin() + i, bytes.end());
      return result;
    }
    const std::size_t len = bytes[i + 3];
    if (len > kMaxPayload) {
      result.diagnostics.push_back({DiagnosticKind::BadLength, i});
      ++i;
      continue;
    }
    const std::size_t total = len + kFrameOverhead;
    if (n - i < total) {
      result.diagnostics.push_back({DiagnosticKind::TruncatedFrame, i});
      result.remainder.assign(bytes.begin() + i, bytes.end());
      return result;
    }
    const auto body = bytes.subspan(i + 2, len + 3);
    const std::uint16_t wire = static_cast<std::uint16_t>(bytes[i + total - 2] |
                                                          (bytes[i + total - 1] << 8));
    if (crc16(body) != wire) {
      result.diagnostics.push_back({DiagnosticKind::CrcMismatch, i});
      ++i;
      continue;
    }
    const std::uint8_t opcode = bytes[i + 4];
    if (!is_known_opcode(opcode)) {
      result.diagnostics.push_back({DiagnosticKind::UnknownOpcode, i});
    } else {
      result.frames.push_back(
          {bytes[i + 2], opcode, {bytes.begin() + i + 5, bytes.begin() + i + 5 + len}});
    }
    i += total;
  }
  return result;
}

namespace {

std::vector<std::uint8_t> le16(std::uint16_t v) {
  return {static_cast<std::uint8_t>(v & 0xFF), static_cast<std::uint8_t>(v >> 8)};
}

std::uint16_t read_le16(std::span<const std::uint8_t> p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::int16_t to_i16(double value, const char* what) {
  const double c = std::round(value * 100.0);
  if (!(c >= std::numeric_limits<std::int16_t>::min() && c <= std::numeric_limits<std::int16_t>::max())) {
    throw Error(ErrorKind::InvalidParameter, std::string(what) + " does not fit a 16-bit centi-unit field");
  }
  return static_cast<std::int16_t>(c);
}

void expect(const Frame& f, Opcode op, std::size_t size) {
  if (f.opcode != static_cast<std::uint8_t>(op) || f.payload.size() != size) {
    throw Error(ErrorKind::InvalidParameter, "frame does not carry the expected payload");
  }
}

}  // namespace

Frame set_goal_angle(std::uint8_t id, double degrees) {
  return {id, static_cast<std::uint8_t>(Opcode::SetGoalAngle),
          le16(static_cast<std::uint16_t>(to_i16(degrees, "goal angle")))};
}

Frame set_goal_travel(std::uint8_t id, double mm) {
  const double c = std::round(mm * 100.0);
  if (!(c >= 0.0 && c <= 65535.0)) {
    throw Error(ErrorKind::InvalidParameter, "goal travel does not fit a 16-bit centi-mm field");
  }
  return {id, static_cast<std::uint8_t>(Opcode::SetGoalTravel), le16(static_cast<std::uint16_t>(c))};
}

Frame read_state(std::uint8_t id) { return {id, static_cast<std::uint8_t>(Opcode::ReadState), {}}; }

Frame state_reply(std::uint8_t id, double position, double goal) {
  auto payload = le16(static_cast<std::uint16_t>(to_i16(position, "position")));
  const auto g = le16(static_cast<std::uint16_t>(to_i16(goal, "goal")));
  payload.insert(payload.end(), g.begin(), g.end());
  return {id, static_cast<std::uint8_t>(Opcode::StateReply), payload};
}

double goal_angle_of(const Frame& f) {
  expect(f, Opcode::SetGoalAngle, 2);
  return static_cast<std::int16_t>(read_le16(f.payload)) / 100.0;
}

double goal_travel_of(const Frame& f) {
  expect(f, Opcode::SetGoalTravel, 2);
  return read_le16(f.payload) / 100.0;
}

StateValues state_of(const Frame& f) {
  expect(f, Opcode::StateReply, 4);
  const std::span<const std::uint8_t> p(f.payload);
  return {static_cast<std::int16_t>(read_le16(p)) / 100.0,
          static_cast<std::int16_t>(read_le16(p.subspan(2))) / 100.0};
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
  std::string out;
  char buf[4];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%02X", bytes[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> parse_hex_dump(std::istream& in) {
  std::vector<std::vector<std::uint8_t>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::vector<std::uint8_t> frame;
    std::istringstream tokens{std::string(trimmed)};
    std::string tok;
    while (tokens >> tok) {
      unsigned value = 0;
      char extra = 0;
      if (tok.size() != 2 || std::sscanf(tok.c_str(), "%2x%c", &value, &extra) != 1) {
        throw Error(ErrorKind::ParseError,
                    "frame dump line " + std::to_string(line_no) + ": bad byte '" + tok + "'");
      }
      frame.push_back(static_cast<std::uint8_t>(value));
    }
    out.push_back(std::move(frame));
  }
  return out;
}

ServoSimState step_servo(const ServoSimState& state, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "servo step needs dt > 0");
  ServoSimState s = state;
  s.goal = std::clamp(s.goal, s.rom.min, s.rom.max);
  const double gap = s.goal - s.position;
  if (std::abs(gap) > s.deadband) {
    const double target = s.goal - std::copysign(s.deadband, gap);
    s.position += (target - s.position) * (1.0 - std::exp(-dt / s.tau));
  }
  s.position = std::clamp(s.position, s.rom.min, s.rom.max);
  return s;
}

LoopbackBus::LoopbackBus(const DualConfig& config) : LoopbackBus(config, Options{}) {}

LoopbackBus::LoopbackBus(const DualConfig& config, const Options& options) : options_(options) {
  const auto rotary = [&](const MechanismParams& p) {
    return Servo{ServoKind::Rotary, {0.0, 0.0, options.tau, options.deadband, p.servo_rom}};
  };
  servos_[1] = rotary(config.left);
  servos_[2] = rotary(config.left);
  servos_[3] = rotary(config.right);
  servos_[4] = rotary(config.right);
  const double start = config.left.linear_travel.min;
  servos_[5] = {ServoKind::Linear,
                {start, start, options.tau, options.linear_deadband, config.left.linear_travel}};
}

const ServoSimState& LoopbackBus::servo(std::uint8_t id) const {
  const auto it = servos_.find(id);
  if (it == servos_.end()) throw Error(ErrorKind::InvalidParameter, "no servo with id " + std::to_string(id));
  return it->second.state;
}

ServoKind LoopbackBus::kind(std::uint8_t id) const {
  const auto it = servos_.find(id);
  if (it == servos_.end()) throw Error(ErrorKind::InvalidParameter, "no servo with id " + std::to_string(id));
  return it->second.kind;
}

void LoopbackBus::advance(double dt) {
  if (dt <= 0.0) return;
  for (auto& [id, s] : servos_) s.state = step_servo(s.state, dt);
  time_ += dt;
}

void LoopbackBus::apply(std::uint8_t id, const Frame& frame) {
  auto& s = servos_.at(id);
  if (frame.opcode == static_cast<std::uint8_t>(Opcode::SetGoalAngle) && s.kind == ServoKind::Rotary) {
    s.state.goal = std::clamp(goal_angle_of(frame), s.state.rom.min, s.state.rom.max);
  } else if (frame.opcode == static_cast<std::uint8_t>(Opcode::SetGoalTravel) &&
             s.kind == ServoKind::Linear) {
    s.state.goal = std::clamp(goal_travel_of(frame), s.state.rom.min, s.state.rom.max);
  }
}

std::vector<Frame> LoopbackBus::handle(const Frame& frame) {
  advance(options_.message_dt);
  std::vector<Frame> replies;
  const auto op = static_cast<Opcode>(frame.opcode);
  const bool setter = op == Opcode::SetGoalAngle || op == Opcode::SetGoalTravel;
  try {
    if (frame.id == kBroadcastId) {
      if (setter) {
        for (auto& [id, s] : servos_) apply(id, frame);
      }
      return replies;
    }
    if (servos_.count(frame.id) == 0) return replies;
    if (setter) {
      apply(frame.id, frame);
    } else if (op == Opcode::ReadState) {
      const auto& s = servos_.at(frame.id).state;
      replies.push_back(state_reply(frame.id, s.position, s.goal));
    }
  } catch (const Error&) {
    // malformed payloads are dropped, as a servo would
  }
  return replies;
}

std::vector<std::uint8_t> LoopbackBus::transact(std::span<const std::uint8_t> bytes) {
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  auto decoded = decode(pending_);
  for (const auto& d : decoded.diagnostics) {
    if (d.kind != DiagnosticKind::TruncatedFrame) diagnostics_.push_back(d);
  }
  pending_ = std::move(decoded.remainder);
  std::vector<std::uint8_t> out;
  for (const auto& f : decoded.frames) {
    for (const auto& reply : handle(f)) {
      const auto bytes_out = encode(reply);
      out.insert(out.end(), bytes_out.begin(), bytes_out.end());
    }
  }
  return out;
}

BusDemoResult run_bus_demo(const DualConfig& config, const TipPose& target,
                           const LoopbackBus::Options& options, double settle_time) {
  BusDemoResult r;
  r.target = target;
  r.commanded = inverse_kinematics(config.left, target).command;
  r.bound = config.left.l_c * std::sin(2.0 * deg_to_rad(options.deadband));

  LoopbackBus bus(config, options);
  const auto send = [&](const Frame& f) {
    const auto bytes = encode(f);
    r.sent.push_back(bytes);
    return bus.transact(bytes);
  };
  send(set_goal_angle(1, r.commanded.delta_p));
  send(set_goal_angle(2, r.commanded.delta_y));
  send(set_goal_travel(5, r.commanded.d_p));
  const double step = 1e-3;
  for (double t = 0.0; t < settle_time; t += step) bus.advance(step);

  std::vector<std::uint8_t> replies;
  for (std::uint8_t id : {1, 2, 5}) {
    const auto bytes = send(read_state(id));
    replies.insert(replies.end(), bytes.begin(), bytes.end());
  }
  const auto decoded = decode(replies);
  if (decoded.frames.size() != 3) {
    throw Error(ErrorKind::InvalidParameter, "bus demo expected 3 state replies, got " +
                                                 std::to_string(decoded.frames.size()));
  }
  for (const auto& f : decoded.frames) r.received.push_back(encode(f));
  r.settled = {state_of(decoded.frames[0]).position, state_of(decoded.frames[1]).position,
               state_of(decoded.frames[2]).position};
  r.reached = forward_kinematics(config.left, r.settled);
  r.error = (r.reached.vec() - target.vec()).norm();
  return r;
}

}  // namespace chopstick::bus
