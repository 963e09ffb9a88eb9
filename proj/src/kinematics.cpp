#include "chopstick/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chopstick/error.hpp"
#include "chopstick/text.hpp"

namespace chopstick {

namespace {

constexpr int kGridSize = 16;
constexpr int kMaxIterations = 100;
constexpr double kResidualTolerance = 1e-9;  // mm
constexpr double kJacobianStep = 1e-6;
constexpr double kBranchTolerance = 1e-6;    // mm, tip distance between solutions

AxisConstruction solve_axis(const SphericalDir& dir, double l_b, double l_j, Axis plane_normal,
                            const Eigen::Vector2d& pivot, double horn_length, const Interval& rom,
                            std::string_view name) {
  AxisConstruction axis;
  axis.mount = backend_mount_position(dir, l_b);
  try {
    axis.mount_circle = sphere_plane_circle({axis.mount, l_j}, {plane_normal, 0.0});
    axis.horn_circle = {pivot, horn_length};
    axis.intersection = circle_circle_intersect(axis.horn_circle, axis.mount_circle);
  } catch (const Error& e) {
    throw Error(ErrorKind::LinkageInfeasible,
                std::string(name) + " linkage cannot close: " + e.what());
  }
  try {
    axis.chosen = pick_feasible_intersection(axis.intersection.points, pivot, rom);
  } catch (const Error& e) {
    throw Error(ErrorKind::RomViolated, std::string(name) + " servo: " + e.what());
  }
  return axis;
}

// Chopstick direction parameterized by the tip's normalized xy offset. Unlike
// (phi, psi) this is regular at the zero pose.
struct DirUV {
  double u = 0.0;  // sin(phi) sin(psi)
  double v = 0.0;  // sin(phi) cos(psi)

  double s2() const { return u * u + v * v; }
  double cos_phi() const { return std::sqrt(std::max(0.0, 1.0 - s2())); }
};

Eigen::Vector3d mount_uv(const DirUV& q, double l_b) {
  return -l_b * Eigen::Vector3d{q.u, q.v, q.cos_phi()};
}

struct LinkageProblem {
  Eigen::Vector3d pitch_tip;
  Eigen::Vector3d yaw_tip;
  double l_p;
  double l_y;
  double l_j;

  Eigen::Vector2d residual(const DirUV& q) const {
    return {(pitch_tip - mount_uv(q, l_p)).norm() - l_j, (yaw_tip - mount_uv(q, l_y)).norm() - l_j};
  }

  Eigen::Matrix2d jacobian(const DirUV& q) const {
    Eigen::Matrix2d j;
    const double h = kJacobianStep;
    j.col(0) = (residual({q.u + h, q.v}) - residual({q.u - h, q.v})) / (2.0 * h);
    j.col(1) = (residual({q.u, q.v + h}) - residual({q.u, q.v - h})) / (2.0 * h);
    return j;
  }
};

struct NewtonResult {
  DirUV q;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

NewtonResult damped_newton(const LinkageProblem& problem, DirUV q, double max_s2) {
  NewtonResult out;
  Eigen::Vector2d r = problem.residual(q);
  double norm = r.cwiseAbs().maxCoeff();
  for (int it = 0; it < kMaxIterations; ++it) {
    if (norm < kResidualTolerance) {
      out.converged = true;
      break;
    }
    const Eigen::Matrix2d j = problem.jacobian(q);
    if (std::abs(j.determinant()) < 1e-14) break;
    const Eigen::Vector2d step = -j.partialPivLu().solve(r);

    double alpha = 1.0;
    bool improved = false;
    while (alpha > 1e-6) {
      const DirUV trial{q.u + alpha * step.x(), q.v + alpha * step.y()};
      if (trial.s2() < max_s2) {
        const Eigen::Vector2d tr = problem.residual(trial);
        const double tn = tr.cwiseAbs().maxCoeff();
        if (tn < norm) {
          q = trial;
          r = tr;
          norm = tn;
          improved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  // One polishing step once inside tolerance; kept only if it helps.
  if (out.converged) {
    const Eigen::Matrix2d j = problem.jacobian(q);
    if (std::abs(j.determinant()) >= 1e-14) {
      const Eigen::Vector2d step = -j.partialPivLu().solve(r);
      const DirUV trial{q.u + step.x(), q.v + step.y()};
      if (trial.s2() < max_s2) {
        const double tn = problem.residual(trial).cwiseAbs().maxCoeff();
        if (tn < norm) {
          q = trial;
          norm = tn;
        }
      }
    }
  }
  out.q = q;
  out.residual = norm;
  return out;
}

void check_command(const MechanismParams& params, const PlatformCommand& command) {
  if (!params.linear_travel.contains(command.d_p)) {
    throw Error(ErrorKind::TravelExceeded,
                "platform travel " + text::format_double(command.d_p) + " mm outside [" +
                    text::format_double(params.linear_travel.min) + ", " +
                    text::format_double(params.linear_travel.max) + "]");
  }
  if (!params.servo_rom.contains(command.delta_p) || !params.servo_rom.contains(command.delta_y)) {
    throw Error(ErrorKind::RomViolated, "servo angle outside the servo range");
  }
}

}  // namespace

IkSolution inverse_kinematics(const MechanismParams& params, const TipPose& target) {
  const double r = target.radial();
  if (!(r < params.l_c)) {
    throw Error(ErrorKind::OutOfReach, "radial distance " + text::format_double(r) +
                                           " mm is beyond the chopstick length " +
                                           text::format_double(params.l_c) + " mm");
  }

  IkSolution sol;
  sol.dir.psi = (target.x == 0.0 && target.y == 0.0) ? 0.0 : std::atan2(target.x, target.y);
  sol.z_calc = std::sqrt(params.l_c * params.l_c - r * r);
  // equals acos(z_calc / l_c) without the loss of precision near zero tilt
  sol.dir.phi = std::atan2(r, sol.z_calc);

  sol.command.d_p = target.z - sol.z_calc - params.z_offset;
  if (!params.linear_travel.contains(sol.command.d_p)) {
    throw Error(ErrorKind::TravelExceeded,
                "required platform travel " + text::format_double(sol.command.d_p) +
                    " mm outside [" + text::format_double(params.linear_travel.min) + ", " +
                    text::format_double(params.linear_travel.max) + "]");
  }

  sol.pitch = solve_axis(sol.dir, params.l_p, params.l_j, Axis::X, params.pitch_pivot, params.l_p,
                         params.servo_rom, "pitch");
  sol.yaw = solve_axis(sol.dir, params.l_y, params.l_j, Axis::Y, params.yaw_pivot, params.l_y,
                       params.servo_rom, "yaw");
  sol.command.delta_p = sol.pitch.chosen.angle_deg;
  sol.command.delta_y = sol.yaw.chosen.angle_deg;
  return sol;
}

Eigen::Vector3d pitch_horn_tip(const MechanismParams& params, double delta_p_deg) {
  const Eigen::Vector2d t = horn_tip(params.pitch_pivot, params.l_p, delta_p_deg);
  return {0.0, t.x(), t.y()};
}

Eigen::Vector3d yaw_horn_tip(const MechanismParams& params, double delta_y_deg) {
  const Eigen::Vector2d t = horn_tip(params.yaw_pivot, params.l_y, delta_y_deg);
  return {t.x(), 0.0, t.y()};
}

Eigen::Vector2d linkage_residuals(const MechanismParams& params, const SphericalDir& dir,
                                  const PlatformCommand& command) {
  const Eigen::Vector3d bp = backend_mount_position(dir, params.l_p);
  const Eigen::Vector3d by = backend_mount_position(dir, params.l_y);
  return {(pitch_horn_tip(params, command.delta_p) - bp).norm() - params.l_j,
          (yaw_horn_tip(params, command.delta_y) - by).norm() - params.l_j};
}

FkSolution solve_forward(const MechanismParams& params, const PlatformCommand& command) {
  check_command(params, command);

  const LinkageProblem problem{pitch_horn_tip(params, command.delta_p),
                               yaw_horn_tip(params, command.delta_y), params.l_p, params.l_y,
                               params.l_j};
  const double max_phi = deg_to_rad(params.fk_max_tilt_deg);
  const double cone_s2 = std::pow(std::sin(max_phi), 2);
  // Newton may wander a little past the cone; solutions are filtered afterwards.
  const double search_s2 = std::min(0.999, std::pow(std::sin(std::min(max_phi * 1.5, 1.5)), 2));

  std::vector<NewtonResult> solutions;
  double best_residual = std::numeric_limits<double>::infinity();
  int converged = 0;

  for (int i = 0; i < kGridSize; ++i) {
    const double phi = max_phi * i / (kGridSize - 1);
    // every azimuth is the same seed at zero tilt
    const int azimuths = (i == 0) ? 1 : kGridSize;
    for (int j = 0; j < azimuths; ++j) {
      const double psi = -std::numbers::pi + 2.0 * std::numbers::pi * (j + 1) / kGridSize;
      const DirUV seed{std::sin(phi) * std::sin(psi), std::sin(phi) * std::cos(psi)};
      const NewtonResult res = damped_newton(problem, seed, search_s2);
      best_residual = std::min(best_residual, res.residual);
      if (!res.converged || res.q.s2() > cone_s2 + 1e-12) continue;
      ++converged;

      const auto same = std::find_if(solutions.begin(), solutions.end(), [&](const NewtonResult& s) {
        return params.l_c * std::hypot(s.q.u - res.q.u, s.q.v - res.q.v) < kBranchTolerance;
      });
      if (same == solutions.end()) {
        solutions.push_back(res);
      } else if (res.residual < same->residual) {
        *same = res;
      }
    }
  }

  const auto tip_of = [&](const DirUV& q) {
    return TipPose{params.l_c * q.u, params.l_c * q.v,
                   command.d_p + params.l_c * q.cos_phi() + params.z_offset};
  };

  if (solutions.empty()) {
    throw Error(ErrorKind::NoConvergence,
                "forward kinematics did not converge (best residual " +
                    text::format_double(best_residual) + " mm)");
  }
  if (solutions.size() > 1) {
    const TipPose a = tip_of(solutions[0].q);
    const TipPose b = tip_of(solutions[1].q);
    throw Error(ErrorKind::MultipleBranches,
                "forward kinematics has distinct solutions (" + text::format_fixed(a.x, 6) + ", " +
                    text::format_fixed(a.y, 6) + ", " + text::format_fixed(a.z, 6) + ") and (" +
                    text::format_fixed(b.x, 6) + ", " + text::format_fixed(b.y, 6) + ", " +
                    text::format_fixed(b.z, 6) + ")");
  }

  const DirUV q = solutions.front().q;
  FkSolution out;
  out.tip = tip_of(q);
  const double s = std::sqrt(q.s2());
  out.dir.phi = std::atan2(s, q.cos_phi());
  out.dir.psi = (s == 0.0) ? 0.0 : std::atan2(q.u, q.v);
  out.residual = solutions.front().residual;
  out.converged_seeds = converged;
  return out;
}

double travel_to_servo_rotation(const MechanismParams& params, double d_p) {
  if (!params.linear_travel.contains(d_p)) {
    throw Error(ErrorKind::TravelExceeded,
                "platform travel " + text::format_double(d_p) + " mm outside [" +
                    text::format_double(params.linear_travel.min) + ", " +
                    text::format_double(params.linear_travel.max) + "]");
  }
  return d_p / params.leadscrew_lead;
}

}  // namespace chopstick
