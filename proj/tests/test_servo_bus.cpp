#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "chopstick/error.hpp"
#include "chopstick/servo_bus.hpp"

using namespace chopstick;
using namespace chopstick::bus;
using doctest::Approx;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

Frame random_frame(std::mt19937_64& rng) {
  static const std::uint8_t ops[] = {0x01, 0x02, 0x03, 0x81};
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, static_cast<int>(kMaxPayload));
  Frame f;
  f.id = static_cast<std::uint8_t>(byte(rng));
  f.opcode = ops[byte(rng) % 4];
  f.payload.resize(static_cast<std::size_t>(len(rng)));
  for (auto& b : f.payload) b = static_cast<std::uint8_t>(byte(rng));
  return f;
}

ErrorKind encode_error(const Frame& f) {
  try {
    encode(f);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected encode to throw");
  return ErrorKind::ParseError;
}

}  // namespace

TEST_CASE("crc check value") {
  CHECK(crc16(bytes_of("123456789")) == 0x29B1);
  CHECK(crc16({}) == 0xFFFF);
}

TEST_CASE("encoding by hand") {
  const auto bytes = encode(set_goal_angle(1, 90.0));
  REQUIRE(bytes.size() == 9);
  CHECK(bytes[0] == 0xFE);
  CHECK(bytes[1] == 0xED);
  CHECK(bytes[2] == 0x01);
  CHECK(bytes[3] == 0x02);
  CHECK(bytes[4] == 0x01);
  CHECK(bytes[5] == 0x28);
  CHECK(bytes[6] == 0x23);
  const std::uint16_t crc = crc16(std::span(bytes).subspan(2, 5));
  CHECK(bytes[7] == (crc & 0xFF));
  CHECK(bytes[8] == (crc >> 8));

  CHECK(encode(set_goal_angle(3, -0.01))[5] == 0xFF);
  CHECK(goal_angle_of(set_goal_angle(2, -45.5)) == -45.5);
  CHECK(goal_travel_of(set_goal_travel(5, 12.34)) == Approx(12.34));
  const auto st = state_of(state_reply(4, -12.25, 30.0));
  CHECK(st.position == -12.25);
  CHECK(st.goal == 30.0);
  CHECK(encode(read_state(7)).size() == kFrameOverhead);
}

TEST_CASE("encode errors") {
  Frame big{1, 0x01, std::vector<std::uint8_t>(251, 0)};
  CHECK(encode_error(big) == ErrorKind::PayloadTooLong);
  big.payload.resize(250);
  CHECK_NOTHROW(encode(big));
  CHECK(encode_error({1, 0x42, {}}) == ErrorKind::UnknownOpcode);
  CHECK_THROWS_AS(set_goal_angle(1, 400.0), Error);
  CHECK_THROWS_AS(set_goal_travel(1, -1.0), Error);
  CHECK_THROWS_AS(goal_angle_of(read_state(1)), Error);
}

TEST_CASE("round trip over random frames") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto f = random_frame(rng);
    const auto d = decode(encode(f));
    REQUIRE(d.frames.size() == 1);
    CHECK(d.frames[0] == f);
    CHECK(d.diagnostics.empty());
    CHECK(d.remainder.empty());
  }
}

TEST_CASE("decoder resynchronizes") {
  const auto frame = encode(set_goal_angle(1, 12.5));
  SUBCASE("garbage prefix") {
    std::vector<std::uint8_t> in{0x00, 0xFE, 0x13, 0xFE, 0xFE};
    in.insert(in.end(), frame.begin(), frame.end());
    const auto d = decode(in);
    REQUIRE(d.frames.size() == 1);
    CHECK(goal_angle_of(d.frames[0]) == 12.5);
    CHECK(d.remainder.empty());
  }
  SUBCASE("empty") {
    const auto d = decode({});
    CHECK(d.frames.empty());
    CHECK(d.remainder.empty());
    CHECK(d.diagnostics.empty());
  }
  SUBCASE("corrupt frame followed by a good one") {
    auto bad = frame;
    bad[5] ^= 0x10;
    bad.insert(bad.end(), frame.begin(), frame.end());
    const auto d = decode(bad);
    REQUIRE(d.frames.size() == 1);
    REQUIRE(d.diagnostics.size() == 1);
    CHECK(d.diagnostics[0].kind == DiagnosticKind::CrcMismatch);
    CHECK(d.diagnostics[0].offset == 0);
  }
  SUBCASE("split delivery") {
    const std::span<const std::uint8_t> all(frame);
    const auto first = decode(all.first(4));
    CHECK(first.frames.empty());
    CHECK(first.remainder.size() == 4);
    auto joined = first.remainder;
    joined.insert(joined.end(), frame.begin() + 4, frame.end());
    CHECK(decode(joined).frames.size() == 1);

    const auto cut = decode(all.first(7));
    REQUIRE(cut.diagnostics.size() == 1);
    CHECK(cut.diagnostics[0].kind == DiagnosticKind::TruncatedFrame);
    CHECK(cut.remainder.size() == 7);
    CHECK(decode(all.first(1)).remainder.size() == 1);
  }
  SUBCASE("valid crc with unknown opcode") {
    std::vector<std::uint8_t> raw{0xFE, 0xED, 0x01, 0x00, 0x55};
    const auto crc = crc16(std::span(raw).subspan(2));
    raw.push_back(crc & 0xFF);
    raw.push_back(crc >> 8);
    const auto d = decode(raw);
    CHECK(d.frames.empty());
    REQUIRE(d.diagnostics.size() == 1);
    CHECK(d.diagnostics[0].kind == DiagnosticKind::UnknownOpcode);
  }
}

TEST_CASE("every single-bit flip is detected") {
  // 32-byte reference frame: 25 payload bytes
  Frame ref{3, 0x81, {}};
  for (int i = 0; i < 25; ++i) ref.payload.push_back(static_cast<std::uint8_t>(i * 37 + 5));
  const auto bytes = encode(ref);
  REQUIRE(bytes.size() == 32);
  for (std::size_t i = 2; i < bytes.size(); ++i) {
    for (int b = 0; b < 8; ++b) {
      auto corrupt = bytes;
      corrupt[i] ^= static_cast<std::uint8_t>(1u << b);
      // pad so that a flipped length byte still leaves a complete frame to check
      corrupt.resize(corrupt.size() + 300, 0);
      const auto d = decode(corrupt);
      CHECK(d.frames.empty());
      bool crc = false;
      for (const auto& diag : d.diagnostics) crc = crc || diag.kind == DiagnosticKind::CrcMismatch ||
                                                   diag.kind == DiagnosticKind::BadLength;
      CHECK_MESSAGE(crc, "byte ", i, " bit ", b);
    }
  }
}

TEST_CASE("two-bit errors are detected") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_frame(rng);
    f.payload.resize(f.payload.size() % 57);  // frames of at most 64 bytes
    const auto bytes = encode(f);
    const std::size_t bits = (bytes.size() - 2) * 8;
    for (int k = 0; k < 50; ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, bits - 1);
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      while (b == a) b = pick(rng);
      auto corrupt = bytes;
      corrupt[2 + a / 8] ^= static_cast<std::uint8_t>(1u << (a % 8));
      corrupt[2 + b / 8] ^= static_cast<std::uint8_t>(1u << (b % 8));
      corrupt.resize(corrupt.size() + 300, 0);
      CHECK(decode(corrupt).frames.empty());
    }
  }
}

TEST_CASE("decoder survives random input") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> noise(50000);
    for (auto& b : noise) b = static_cast<std::uint8_t>(byte(rng));
    // bias toward sync bytes so frame parsing paths run
    for (std::size_t i = 0; i + 1 < noise.size(); i += 97) {
      noise[i] = 0xFE;
      noise[i + 1] = 0xED;
    }
    const auto d = decode(noise);
    CHECK(d.remainder.size() <= noise.size());
  }
}

TEST_CASE("hex dump") {
  const auto bytes = encode(set_goal_angle(1, 90.0));
  const auto line = hex_dump(bytes);
  CHECK(line.rfind("FE ED 01 02 01 28 23 ", 0) == 0);
  std::istringstream in("# frames\n" + line + "\n\n" + hex_dump(encode(read_state(2))) + "\n");
  const auto parsed = parse_hex_dump(in);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == bytes);
  std::istringstream bad("FE EX\n");
  CHECK_THROWS_AS(parse_hex_dump(bad), Error);
}

TEST_CASE("servo dynamics") {
  ServoSimState s;
  SUBCASE("fixed point") {
    s.position = s.goal = 10.0;
    CHECK(step_servo(s, 0.01).position == 10.0);
  }
  SUBCASE("inside deadband") {
    s.goal = 0.1;
    CHECK(step_servo(s, 0.01).position == 0.0);
  }
  SUBCASE("one time constant") {
    s.goal = 90.0;
    const auto next = step_servo(s, 0.05);
    CHECK(next.position == Approx((1.0 - std::exp(-1.0)) * (90.0 - 0.25)));
  }
  SUBCASE("convergence within ten time constants") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> angle(-90.0, 90.0);
    for (int i = 0; i < 500; ++i) {
      ServoSimState t;
      t.position = angle(rng);
      t.goal = angle(rng);
      const double gap = std::abs(t.goal - t.position);
      for (int k = 0; k < 100; ++k) t = step_servo(t, t.tau / 10.0);
      CHECK(std::abs(t.position - t.goal) <= t.deadband + std::exp(-10.0) * gap + 1e-12);
      if (gap > t.deadband) CHECK(std::abs(t.position - t.goal) >= t.deadband - 1e-12);
    }
  }
  SUBCASE("range clamp and bad dt") {
    s.goal = 200.0;
    for (int k = 0; k < 100; ++k) s = step_servo(s, 0.05);
    CHECK(s.position <= 90.0);
    CHECK_THROWS_AS(step_servo(s, 0.0), Error);
  }
}

TEST_CASE("loopback bus") {
  LoopbackBus bus(default_dual_config());
  const auto send = [&](const Frame& f) { return decode(bus.transact(encode(f))).frames; };

  CHECK(send(set_goal_angle(1, 30.0)).empty());
  auto reply = send(read_state(1));
  REQUIRE(reply.size() == 1);
  CHECK(reply[0].id == 1);
  CHECK(state_of(reply[0]).goal == 30.0);
  CHECK(state_of(reply[0]).position > 0.0);

  CHECK(send(read_state(200)).empty());
  CHECK(send(set_goal_angle(200, 5.0)).empty());

  CHECK(send(set_goal_angle(kBroadcastId, -20.0)).empty());
  for (std::uint8_t id = 1; id <= 4; ++id) CHECK(bus.servo(id).goal == -20.0);
  CHECK(bus.servo(5).goal == 0.0);  // angle commands do not reach the linear servo

  CHECK(send(set_goal_travel(5, 12.5)).empty());
  bus.advance(1.0);
  reply = send(read_state(5));
  REQUIRE(reply.size() == 1);
  CHECK(state_of(reply[0]).position == Approx(12.5).epsilon(1e-3));
  CHECK(bus.servo(1).position == Approx(-19.75).epsilon(1e-4));

  // bytes split across two calls still form one request
  const auto req = encode(read_state(2));
  CHECK(bus.transact(std::span(req).first(3)).empty());
  CHECK(decode(bus.transact(std::span(req).subspan(3))).frames.size() == 1);

  auto corrupt = encode(read_state(3));
  corrupt[2] ^= 0x04;
  CHECK(bus.transact(corrupt).empty());
  CHECK(!bus.diagnostics().empty());
}

TEST_CASE("end-to-end bus demo near the origin") {
  const auto cfg = default_dual_config();
  const double z0 = zero_pose_z(cfg.left);
  for (const TipPose t : {TipPose{0.0, 0.0, z0 + 5.0}, TipPose{2.0, -3.0, z0 + 10.0},
                          TipPose{-4.0, 4.0, z0 + 20.0}, TipPose{5.0, 1.0, z0 + 1.0}}) {
    const auto r = run_bus_demo(cfg, t);
    CHECK(r.bound == Approx(1.4137).epsilon(1e-3));
    CHECK(r.error <= r.bound);
    CHECK(r.sent.size() == 6);
    CHECK(r.received.size() == 3);
  }
}
