#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "chopstick/grasp.hpp"

using namespace chopstick;
using doctest::Approx;

namespace {

FoodItem grape() { return {"grape", 9.0, {28.0, 18.0, 24.0}, 0.8, 1.2}; }

const Eigen::Vector3d kCenter{0.0, 0.0, 175.0};

// composite Simpson per profile piece; exact for piecewise-linear speed
double integrate_speed(const TrapezoidProfile& p, int steps) {
  const double knots[4] = {0.0, p.ramp_time, p.ramp_time + p.cruise_time, p.duration()};
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    if (b <= a) continue;
    const double h = (b - a) / steps;
    double s = p.speed(a + 1e-15) + p.speed(b - 1e-15);
    for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * p.speed(a + i * h);
    total += s * h / 3.0;
  }
  return total;
}

ErrorKind pinch_error(const DualConfig& c, double width, double force, double k,
                      const Eigen::Vector3d& center = kCenter) {
  try {
    plan_pinch(c, center, width, force, k);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected plan_pinch to throw");
  return ErrorKind::ParseError;
}

}  // namespace

TEST_CASE("pinch geometry") {
  const auto cfg = default_dual_config();
  const auto zero = plan_pinch(cfg, kCenter, 20.0, 0.0, 1.0);
  CHECK(zero.tip_separation() == Approx(20.0).epsilon(1e-12));
  CHECK(zero.left_ee.x() == -10.0);
  CHECK(zero.right_ee.x() == 10.0);
  // left tip is 40 mm inboard of its pivot; the mirrored right frame sees the same
  CHECK(zero.left_tip.x == 40.0);
  CHECK(zero.right_tip.x == 40.0);
  CHECK(zero.left_command.delta_p == Approx(zero.right_command.delta_p));

  const auto pressed = plan_pinch(cfg, kCenter, 20.0, 2.0, 1.0);
  CHECK(pressed.penetration == 2.0);
  CHECK(pressed.tip_separation() == Approx(16.0).epsilon(1e-12));

  for (const Eigen::Vector3d& ee : {zero.left_ee, zero.right_ee}) {
    for (bool right : {false, true}) {
      CHECK(from_platform_frame(cfg, right, to_platform_frame(cfg, right, ee)) == ee);
    }
  }
}

TEST_CASE("pinch symmetry under reflection") {
  const auto cfg = default_dual_config();
  for (double cx : {-12.5, -3.0, 0.0, 7.25, 15.0}) {
    const Eigen::Vector3d c{cx, 4.0, 178.0};
    const Eigen::Vector3d r{-cx, 4.0, 178.0};
    const auto a = plan_pinch(cfg, c, 24.0, 1.0, 0.8);
    const auto b = plan_pinch(cfg, r, 24.0, 1.0, 0.8);
    CHECK(a.left_tip == b.right_tip);
    CHECK(a.right_tip == b.left_tip);
  }
}

TEST_CASE("pinch errors") {
  const auto cfg = default_dual_config();
  CHECK(pinch_error(cfg, 120.0, 1.0, 1.0) == ErrorKind::ObjectTooWide);
  CHECK(pinch_error(cfg, 100.0, 1.0, 1.0) == ErrorKind::ObjectTooWide);
  CHECK(pinch_error(cfg, 10.0, 20.0, 1.0) == ErrorKind::InvalidParameter);
  CHECK(pinch_error(cfg, 10.0, -1.0, 1.0) == ErrorKind::InvalidParameter);
  CHECK(pinch_error(cfg, 10.0, 1.0, 0.0) == ErrorKind::InvalidParameter);
  try {
    plan_pinch(cfg, {0.0, 0.0, 250.0}, 20.0, 0.0, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnreachablePinch);
    CHECK(std::string(e.what()).find("left platform") != std::string::npos);
  }
}

TEST_CASE("trapezoid profile") {
  const auto p = make_trapezoid(200.0, 200.0, 1000.0);
  CHECK(p.peak_speed == 200.0);
  CHECK(p.ramp_time == Approx(0.2));
  CHECK(p.cruise_time == Approx(0.8));
  CHECK(p.duration() == Approx(1.2));
  CHECK(p.position(p.duration()) == 200.0);
  CHECK(p.position(0.6) == Approx(100.0));
  CHECK(std::abs(integrate_speed(p, 1000) - 200.0) / 200.0 < 1e-9);

  const auto tri = make_trapezoid(10.0, 200.0, 1000.0);
  CHECK(tri.cruise_time == 0.0);
  CHECK(tri.peak_speed == Approx(100.0));
  CHECK(tri.position(tri.duration()) == 10.0);
  CHECK(std::abs(integrate_speed(tri, 1000) - 10.0) / 10.0 < 1e-9);

  CHECK_THROWS_AS(make_trapezoid(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(make_trapezoid(1.0, -1.0, 1.0), Error);
  CHECK_THROWS_AS(make_trapezoid(1.0, 1.0, 0.0), Error);
}

TEST_CASE("trial trajectory") {
  const auto traj = build_trial_trajectory({}, 1.0);
  REQUIRE(traj.segments.size() == 1 + 1 + 6 + 2);
  CHECK(traj.segments[0].phase == Phase::Grasp);
  CHECK(traj.segments[1].phase == Phase::Lift);
  CHECK(traj.segments[1].profile->distance == 250.0);
  int translations = 0;
  for (const auto& s : traj.segments) {
    if (s.phase != Phase::Translate) continue;
    ++translations;
    CHECK(s.profile->distance == 200.0);
    CHECK(s.profile->peak_speed == 200.0);
    CHECK(s.duration == Approx(1.2));
  }
  CHECK(translations == 6);
  CHECK(traj.segments[8].rotation_axis == Eigen::Vector3d::UnitY());
  CHECK(traj.segments[9].rotation_axis == Eigen::Vector3d::UnitZ());

  // phases are contiguous and the translation cycles return to the apex
  for (std::size_t i = 1; i < traj.segments.size(); ++i) {
    CHECK(traj.segments[i].t0 == Approx(traj.segments[i - 1].t0 + traj.segments[i - 1].duration));
  }
  const Eigen::Vector3d apex{0.0, 0.0, -250.0};
  CHECK((traj.segments[8].start - apex).norm() < 1e-9);

  const auto end = traj.at(traj.duration());
  const Eigen::Quaterniond expected = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitY()) *
                                      Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ());
  CHECK(end.orientation.angularDistance(expected) < 1e-9);

  const auto wps = traj.sample(0.01);
  for (std::size_t i = 1; i < wps.size(); ++i) {
    CHECK(wps[i].t > wps[i - 1].t);
    const double v = (wps[i].position - wps[i - 1].position).norm() / (wps[i].t - wps[i - 1].t);
    CHECK(v <= 200.0 + 1e-6);
  }
  CHECK(wps.back().t == Approx(traj.duration()));

  TrialProtocol none;
  none.cycles = 0;
  const auto short_traj = build_trial_trajectory(none, 1.0);
  CHECK(short_traj.segments.size() == 4);
  for (const auto& s : short_traj.segments) CHECK(s.phase != Phase::Translate);

  CHECK_THROWS_AS(build_trial_trajectory({}, 0.0), Error);
  // low acceleration gives triangular profiles, not an error
  const auto slow = build_trial_trajectory({}, 0.05);
  CHECK(slow.segments[2].profile->peak_speed == Approx(100.0));
}

TEST_CASE("slip prediction") {
  const auto cfg = default_dual_config();
  const auto traj = build_trial_trajectory({}, 1.0);
  const auto item = grape();
  const auto plan = plan_pinch(cfg, kCenter, item.width(), 2.0, item.k);
  const auto pred = predict_slip(item, plan, traj);
  CHECK(pred.rotation_hold);
  CHECK(pred.translation_hold);
  for (const auto& v : pred.phases) {
    CHECK(v.hold);
    CHECK(v.available == Approx(3.2));
  }
  CHECK(pred.limiting == Phase::Lift);
  CHECK(pred.margin == Approx(3.2 / (0.009 * 10.81)));

  auto slick = item;
  slick.mu = 1e-9;
  const auto none = predict_slip(slick, plan, traj);
  for (const auto& v : none.phases) CHECK(!v.hold);
  CHECK(!none.rotation_hold);
  CHECK(!none.translation_hold);

  SUBCASE("rotation worst case is plain gravity") {
    for (const auto& v : pred.phases) {
      if (v.phase == Phase::Rotate) CHECK(v.required == Approx(0.009 * 9.81));
    }
  }
}

TEST_CASE("slip verdicts are monotone") {
  const auto cfg = default_dual_config();
  const auto traj = build_trial_trajectory({}, 1.0);
  const auto verdict = [&](double mu, double grip, double mass) {
    FoodItem it{"x", mass, {30, 20, 20}, mu, 2.0};
    const auto plan = plan_pinch(cfg, kCenter, 20.0, grip, 2.0);
    const auto p = predict_slip(it, plan, traj);
    return std::pair{p.rotation_hold, p.translation_hold};
  };
  const auto le = [](std::pair<bool, bool> a, std::pair<bool, bool> b) {
    return (!a.first || b.first) && (!a.second || b.second);
  };
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      for (int k = 0; k < 9; ++k) {
        const double mu = 0.01 + 0.02 * i, grip = 0.1 + 0.3 * j, mass = 5.0 + 15.0 * k;
        CHECK(le(verdict(0.01 + 0.02 * k, grip, mass), verdict(0.01 + 0.02 * (k + 1), grip, mass)));
        CHECK(le(verdict(mu, 0.1 + 0.3 * k, mass), verdict(mu, 0.1 + 0.3 * (k + 1), mass)));
        CHECK(le(verdict(mu, grip, 5.0 + 15.0 * (k + 1)), verdict(mu, grip, 5.0 + 15.0 * k)));
      }
    }
  }
}

TEST_CASE("trial suite over the fixture") {
  std::ifstream in(CHOPSTICK_DATA_DIR "/food_items.csv");
  REQUIRE(in.good());
  const auto items = read_food_items_csv(in);
  REQUIRE(items.size() == 12);
  CHECK(items[4].name == "grape");
  CHECK(items[4].mass_g == 9.0);
  CHECK(items[4].dims == Eigen::Vector3d{28, 18, 24});

  const auto rows = run_trial_suite(default_dual_config(), items);
  REQUIRE(rows.size() == 12);
  for (const auto& r : rows) CHECK_MESSAGE(r.prediction.has_value(), r.item.name, r.error_message);
  CHECK(rows[4].prediction->rotation_hold);
  CHECK(rows[4].prediction->translation_hold);

  const auto csv = render_trial_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  const auto j = nlohmann::json::parse(render_trial_json(rows));
  CHECK(j.size() == 12);
  CHECK(j[4]["rot"] == true);

  CHECK(run_trial_suite(default_dual_config(), std::vector<FoodItem>{}).empty());

  // planning failures are recorded and the suite continues
  std::vector<FoodItem> mixed{items[0], {"plank", 50, {200, 150, 10}, 0.5, 1.0}, items[4]};
  const auto mixed_rows = run_trial_suite(default_dual_config(), mixed);
  REQUIRE(mixed_rows.size() == 3);
  CHECK(mixed_rows[1].error == ErrorKind::ObjectTooWide);
  CHECK(mixed_rows[2].prediction.has_value());
  CHECK(render_trial_csv(mixed_rows).find("ObjectTooWide") != std::string::npos);
}

TEST_CASE("item file errors") {
  std::istringstream missing("name,mass_g,L,W,H,mu\n");
  CHECK_THROWS_AS(read_food_items_csv(missing), Error);
  std::istringstream bad("name,mass_g,L,W,H,mu,k\napple,heavy,1,1,1,1,1\n");
  CHECK_THROWS_AS(read_food_items_csv(bad), Error);
  std::istringstream zero("name,mass_g,L,W,H,mu,k\napple,0,1,1,1,1,1\n");
  CHECK_THROWS_AS(read_food_items_csv(zero), Error);
}
