#include "doctest.h"

#include <cmath>
#include <random>

#include "chopstick/error.hpp"
#include "chopstick/geometry.hpp"

using namespace chopstick;
using doctest::Approx;

namespace {

ErrorKind intersect_error(const Circle2& a, const Circle2& b) {
  try {
    circle_circle_intersect(a, b);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected circle_circle_intersect to throw");
  return ErrorKind::ParseError;
}

// Independent route: walk circle 1 by angle and bisect on the signed distance to
// circle 2. Returns the roots found.
std::vector<Eigen::Vector2d> intersections_by_bisection(const Circle2& c1, const Circle2& c2) {
  const auto f = [&](double t) {
    const Eigen::Vector2d p = c1.center + c1.radius * Eigen::Vector2d{std::cos(t), std::sin(t)};
    return (p - c2.center).norm() - c2.radius;
  };
  std::vector<Eigen::Vector2d> roots;
  const int n = 4096;
  for (int i = 0; i < n; ++i) {
    double a = 2 * std::numbers::pi * i / n;
    double b = 2 * std::numbers::pi * (i + 1) / n;
    double fa = f(a);
    if (fa == 0.0) {
      roots.push_back(c1.center + c1.radius * Eigen::Vector2d{std::cos(a), std::sin(a)});
      continue;
    }
    if (fa * f(b) > 0.0) continue;
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (a + b);
      if ((f(m) > 0.0) == (fa > 0.0)) {
        a = m;
        fa = f(a);
      } else {
        b = m;
      }
    }
    const double t = 0.5 * (a + b);
    roots.push_back(c1.center + c1.radius * Eigen::Vector2d{std::cos(t), std::sin(t)});
  }
  return roots;
}

}  // namespace

TEST_CASE("backend mount position") {
  SUBCASE("zero pose points straight down") {
    for (double psi : {0.0, 1.0, -2.5}) {
      const auto p = backend_mount_position({0.0, psi}, 28.0);
      CHECK(p.x() == Approx(0.0));
      CHECK(p.y() == Approx(0.0));
      CHECK(p.z() == Approx(-28.0));
    }
  }
  SUBCASE("horizontal along -y") {
    const auto p = backend_mount_position({std::numbers::pi / 2, 0.0}, 28.0);
    CHECK(p.x() == Approx(0.0).epsilon(1e-12));
    CHECK(p.y() == Approx(-28.0));
    CHECK(p.z() == Approx(0.0).scale(28.0));
  }
  SUBCASE("tilted example") {
    const auto p = backend_mount_position({deg_to_rad(10.06), deg_to_rad(45.0)}, 28.0);
    CHECK(p.x() == Approx(-3.459).epsilon(1e-3));
    CHECK(p.y() == Approx(-3.459).epsilon(1e-3));
    CHECK(p.z() == Approx(-27.570).epsilon(1e-4));
  }
  SUBCASE("norm equals the offset") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> phi(0.0, std::numbers::pi / 2);
    std::uniform_real_distribution<double> psi(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> len(0.1, 100.0);
    for (int i = 0; i < 1000; ++i) {
      const double lb = len(rng);
      const auto p = backend_mount_position({phi(rng), psi(rng)}, lb);
      CHECK(std::abs(p.norm() - lb) <= 1e-12 * lb);
    }
  }
  CHECK_THROWS_AS(backend_mount_position({0.0, 0.0}, 0.0), Error);
}

TEST_CASE("sphere plane circle") {
  SUBCASE("center in plane keeps the radius") {
    const auto c = sphere_plane_circle({{0.0, 4.0, -7.0}, 6.0}, {Axis::X, 0.0});
    CHECK(c.center.x() == 4.0);
    CHECK(c.center.y() == -7.0);
    CHECK(c.radius == 6.0);
  }
  SUBCASE("3-4-5") {
    const auto c = sphere_plane_circle({{3.0, 1.0, 2.0}, 5.0}, {Axis::X, 0.0});
    CHECK(c.radius == Approx(4.0));
    const auto cy = sphere_plane_circle({{1.0, -3.0, 2.0}, 5.0}, {Axis::Y, 0.0});
    CHECK(cy.center.x() == 1.0);
    CHECK(cy.center.y() == 2.0);
    CHECK(cy.radius == Approx(4.0));
  }
  SUBCASE("beyond reach") {
    try {
      sphere_plane_circle({{6.0, 0.0, 0.0}, 5.0}, {Axis::X, 0.0});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoIntersection);
    }
  }
  SUBCASE("pythagorean identity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double r = 1.0 + frac(rng) * 40.0;
      const double dist = (frac(rng) * 2.0 - 1.0) * r;
      const double offset = u(rng);
      const Sphere3 s{{u(rng), offset + dist, u(rng)}, r};
      const auto c = sphere_plane_circle(s, {Axis::Y, offset});
      const double d = s.center.y() - offset;
      CHECK(std::abs(c.radius * c.radius + d * d - r * r) <= 1e-12 * r * r);
    }
  }
}

TEST_CASE("circle circle intersection analytic cases") {
  SUBCASE("unit circles one apart") {
    const auto x = circle_circle_intersect({{0.0, 0.0}, 1.0}, {{1.0, 0.0}, 1.0});
    CHECK(x.d == 1.0);
    CHECK(x.l == 0.5);
    CHECK(std::abs(x.h - std::sqrt(3.0) / 2.0) < 1e-12);
    CHECK(std::abs(x.points[0].x() - 0.5) < 1e-12);
    CHECK(std::abs(x.points[1].x() - 0.5) < 1e-12);
    CHECK(std::abs(x.points[0].y() + 0.8660254037844386) < 1e-12);
    CHECK(std::abs(x.points[1].y() - 0.8660254037844386) < 1e-12);
  }
  SUBCASE("5-5-8") {
    const auto x = circle_circle_intersect({{0.0, 0.0}, 5.0}, {{8.0, 0.0}, 5.0});
    CHECK(std::abs(x.points[0].x() - 4.0) < 1e-12);
    CHECK(std::abs(x.points[0].y() + 3.0) < 1e-12);
    CHECK(std::abs(x.points[1].x() - 4.0) < 1e-12);
    CHECK(std::abs(x.points[1].y() - 3.0) < 1e-12);
  }
  SUBCASE("external tangency yields a double point") {
    const auto x = circle_circle_intersect({{0.0, 0.0}, 2.0}, {{5.0, 0.0}, 3.0});
    CHECK(x.h == 0.0);
    CHECK((x.points[0] - x.points[1]).norm() == 0.0);
    CHECK(x.points[0].x() == Approx(2.0));
  }
  SUBCASE("near tangency within tolerance is tangent") {
    const auto x = circle_circle_intersect({{0.0, 0.0}, 2.0}, {{5.0 + 5e-10, 0.0}, 3.0});
    CHECK(x.h == 0.0);
  }
  SUBCASE("error cases") {
    CHECK(intersect_error({{0.0, 0.0}, 1.0}, {{0.0, 0.0}, 2.0}) == ErrorKind::Concentric);
    CHECK(intersect_error({{0.0, 0.0}, 1.0}, {{3.0, 0.0}, 1.0}) == ErrorKind::Disjoint);
    CHECK(intersect_error({{0.0, 0.0}, 5.0}, {{1.0, 0.0}, 1.0}) == ErrorKind::Contained);
  }
}

TEST_CASE("circle circle intersection agrees with bisection on circle 1") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::uniform_real_distribution<double> rad(1.0, 40.0);
  int compared = 0;
  while (compared < 40) {
    const Circle2 a{{u(rng), u(rng)}, rad(rng)};
    const Circle2 b{{u(rng), u(rng)}, rad(rng)};
    const double d = (a.center - b.center).norm();
    if (d > a.radius + b.radius - 1e-3 || d < std::abs(a.radius - b.radius) + 1e-3) continue;
    const auto x = circle_circle_intersect(a, b);
    const auto roots = intersections_by_bisection(a, b);
    REQUIRE(roots.size() == 2);
    for (const auto& p : x.points) {
      const double nearest = std::min((p - roots[0]).norm(), (p - roots[1]).norm());
      CHECK(nearest < 1e-9);
    }
    ++compared;
  }
}

TEST_CASE("intersection points satisfy both circle equations") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> rad(0.5, 80.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Circle2 a{{u(rng), u(rng)}, rad(rng)};
    const double r2 = rad(rng);
    const double lo = std::abs(a.radius - r2);
    const double hi = a.radius + r2;
    const double d = std::max(lo + frac(rng) * (hi - lo), 1e-6);
    const double theta = frac(rng) * 2.0 * std::numbers::pi;
    const Circle2 b{a.center + d * Eigen::Vector2d{std::cos(theta), std::sin(theta)}, r2};
    const auto x = circle_circle_intersect(a, b);
    for (const auto& p : x.points) {
      CHECK(std::abs((p - a.center).norm() - a.radius) < 1e-9);
      CHECK(std::abs((p - b.center).norm() - b.radius) < 1e-9);
    }
  }
}

TEST_CASE("horn angle convention") {
  const Eigen::Vector2d pivot{-32.5, 0.0};
  CHECK(horn_angle_deg(pivot + Eigen::Vector2d{0.0, -28.0}, pivot) == 0.0);
  CHECK(horn_angle_deg(pivot + Eigen::Vector2d{-28.0, 0.0}, pivot) == Approx(90.0));
  // tan(delta) = dh / dv for a hanging horn
  const Eigen::Vector2d p = pivot + Eigen::Vector2d{3.0, -20.0};
  CHECK(horn_angle_deg(p, pivot) == Approx(rad_to_deg(std::atan(3.0 / -20.0))));
  for (double a : {-170.0, -45.0, 0.0, 12.5, 135.0}) {
    CHECK(horn_angle_deg(horn_tip(pivot, 28.0, a), pivot) == Approx(a));
  }
}

TEST_CASE("pick feasible intersection") {
  const Eigen::Vector2d pivot{-32.5, 0.0};
  const Interval rom{-90.0, 90.0};
  const auto at = [&](double deg) { return horn_tip(pivot, 28.0, deg); };

  SUBCASE("only one in range") {
    const auto pick = pick_feasible_intersection({at(160.0), at(20.0)}, pivot, rom);
    CHECK(pick.angle_deg == Approx(20.0));
  }
  SUBCASE("both in range, smaller magnitude wins") {
    const auto pick = pick_feasible_intersection({at(-40.0), at(15.0)}, pivot, rom);
    CHECK(pick.angle_deg == Approx(15.0));
  }
  SUBCASE("exact tie goes to the negative angle") {
    // mirror-exact points need a pivot on the vertical axis
    const Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    const auto plus = horn_tip(origin, 28.0, 10.0);
    const auto minus = horn_tip(origin, 28.0, -10.0);
    const auto pick = pick_feasible_intersection({plus, minus}, origin, rom);
    CHECK(pick.angle_deg == Approx(-10.0));
    const auto again = pick_feasible_intersection({minus, plus}, origin, rom);
    CHECK(again.angle_deg == Approx(-10.0));
  }
  SUBCASE("both outside") {
    try {
      pick_feasible_intersection({at(120.0), at(170.0)}, pivot, rom);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoFeasibleSolution);
    }
  }
}
