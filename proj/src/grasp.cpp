#include "chopstick/grasp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "chopstick/text.hpp"

namespace chopstick {

void FoodItem::validate() const {
  if (!(mass_g > 0.0)) throw Error(ErrorKind::InvalidParameter, name + ": mass must be positive");
  if (!(dims.array() > 0.0).all()) {
    throw Error(ErrorKind::InvalidParameter, name + ": dimensions must be positive");
  }
  if (!(mu > 0.0)) throw Error(ErrorKind::InvalidParameter, name + ": mu must be positive");
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidParameter, name + ": stiffness must be positive");
}

std::vector<FoodItem> read_food_items_csv(std::istream& in) {
  static const std::array<std::string_view, 7> columns{"name", "mass_g", "L", "W", "H", "mu", "k"};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyFile, "item file is empty");
  const auto header = text::split(text::trim(line), ',');
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i >= header.size() || text::trim(header[i]) != columns[i]) {
      throw Error(ErrorKind::MissingColumn,
                  "item file: expected column '" + std::string(columns[i]) + "'");
    }
  }
  std::vector<FoodItem> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < columns.size()) {
      throw Error(ErrorKind::MissingColumn, "item file line " + std::to_string(line_no));
    }
    double v[6];
    for (std::size_t k = 1; k < columns.size(); ++k) {
      const auto parsed = text::parse_double(fields[k]);
      if (!parsed) {
        throw Error(ErrorKind::NonNumericField, "item file line " + std::to_string(line_no) +
                                                    ", column '" + std::string(columns[k]) + "'");
      }
      v[k - 1] = *parsed;
    }
    FoodItem item{std::string(text::trim(fields[0])), v[0], {v[1], v[2], v[3]}, v[4], v[5]};
    item.validate();
    out.push_back(std::move(item));
  }
  return out;
}

Eigen::Vector3d to_platform_frame(const DualConfig& config, bool right, const Eigen::Vector3d& ee) {
  Eigen::Vector3d p = ee;
  p.x() -= right ? config.baseline / 2.0 : -config.baseline / 2.0;
  if (right && config.mirror) p.x() = -p.x();
  return p;
}

Eigen::Vector3d from_platform_frame(const DualConfig& config, bool right, const Eigen::Vector3d& p) {
  Eigen::Vector3d ee = p;
  if (right && config.mirror) ee.x() = -ee.x();
  ee.x() += right ? config.baseline / 2.0 : -config.baseline / 2.0;
  return ee;
}

PinchPlan plan_pinch(const DualConfig& config, const Eigen::Vector3d& center, double width,
                     double grip_force, double stiffness) {
  if (!(width > 0.0)) throw Error(ErrorKind::InvalidParameter, "object width must be positive");
  if (width >= config.baseline) {
    throw Error(ErrorKind::ObjectTooWide, "object width " + text::format_double(width) +
                                              " mm is not below the baseline " +
                                              text::format_double(config.baseline) + " mm");
  }
  if (!(grip_force >= 0.0)) throw Error(ErrorKind::InvalidParameter, "grip force must be >= 0");
  if (!(stiffness > 0.0)) throw Error(ErrorKind::InvalidParameter, "stiffness must be positive");

  PinchPlan plan;
  plan.grip_force = grip_force;
  plan.penetration = grip_force / stiffness;
  const double half = width / 2.0 - plan.penetration;
  if (half < 0.0) {
    throw Error(ErrorKind::InvalidParameter, "penetration " + text::format_double(plan.penetration) +
                                                 " mm exceeds half the object width");
  }
  plan.left_ee = center - half * plan.grasp_axis;
  plan.right_ee = center + half * plan.grasp_axis;
  plan.left_tip = TipPose::from(to_platform_frame(config, false, plan.left_ee));
  plan.right_tip = TipPose::from(to_platform_frame(config, true, plan.right_ee));

  const auto solve = [](const MechanismParams& params, const TipPose& tip, const char* side) {
    try {
      return inverse_kinematics(params, tip).command;
    } catch (const Error& e) {
      throw Error(ErrorKind::UnreachablePinch, std::string(side) + " platform: " +
                                                   std::string(to_string(e.kind())) + ": " + e.what());
    }
  };
  plan.left_command = solve(config.left, plan.left_tip, "left");
  plan.right_command = solve(config.right, plan.right_tip, "right");
  return plan;
}

// ---------------------------------------------------------------------------
// Trajectory

TrapezoidProfile make_trapezoid(double distance, double max_speed, double accel) {
  if (!(distance > 0.0) || !(max_speed > 0.0) || !(accel > 0.0) || !std::isfinite(distance) ||
      !std::isfinite(max_speed) || !std::isfinite(accel)) {
    throw Error(ErrorKind::InfeasibleProfile, "profile needs positive distance, speed and acceleration");
  }
  TrapezoidProfile p;
  p.distance = distance;
  p.accel = accel;
  const double ramp_distance = max_speed * max_speed / (2.0 * accel);
  if (2.0 * ramp_distance <= distance) {
    p.peak_speed = max_speed;
    p.ramp_time = max_speed / accel;
    p.cruise_time = (distance - 2.0 * ramp_distance) / max_speed;
  } else {
    p.peak_speed = std::sqrt(distance * accel);
    p.ramp_time = p.peak_speed / accel;
    p.cruise_time = 0.0;
  }
  return p;
}

double TrapezoidProfile::position(double t) const {
  const double total = duration();
  if (t <= 0.0) return 0.0;
  if (t >= total) return distance;
  if (t < ramp_time) return 0.5 * accel * t * t;
  if (t <= ramp_time + cruise_time) {
    return 0.5 * accel * ramp_time * ramp_time + peak_speed * (t - ramp_time);
  }
  const double rem = total - t;
  return distance - 0.5 * accel * rem * rem;
}

double TrapezoidProfile::speed(double t) const {
  const double total = duration();
  if (t <= 0.0 || t >= total) return 0.0;
  if (t < ramp_time) return accel * t;
  if (t <= ramp_time + cruise_time) return peak_speed;
  return accel * (total - t);
}

double TrapezoidProfile::acceleration(double t) const {
  const double total = duration();
  if (t < 0.0 || t > total) return 0.0;
  if (t < ramp_time) return accel;
  if (t <= ramp_time + cruise_time) return 0.0;
  return -accel;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Grasp: return "grasp";
    case Phase::Lift: return "lift";
    case Phase::Translate: return "translate";
    case Phase::Rotate: return "rotate";
  }
  return "unknown";
}

double TrialTrajectory::duration() const {
  return segments.empty() ? 0.0 : segments.back().t0 + segments.back().duration;
}

namespace {

Waypoint evaluate(const Segment& s, double t) {
  Waypoint w;
  w.t = t;
  w.phase = s.phase;
  w.label = s.label;
  w.position = s.start;
  w.orientation = s.orientation0;
  if (!s.profile) return w;
  const double u = s.profile->position(t - s.t0);
  if (s.phase == Phase::Rotate) {
    w.orientation = (s.orientation0 * Eigen::AngleAxisd(u * std::numbers::pi / 180.0, s.rotation_axis)).normalized();
  } else {
    w.position = s.start + u * s.direction;
  }
  return w;
}

Waypoint segment_end(const Segment& s) { return evaluate(s, s.t0 + s.duration); }

}  // namespace

Waypoint TrialTrajectory::at(double t) const {
  if (segments.empty()) return {};
  for (const auto& s : segments) {
    if (t <= s.t0 + s.duration) return evaluate(s, std::max(t, s.t0));
  }
  return segment_end(segments.back());
}

std::vector<Waypoint> TrialTrajectory::sample(double dt) const {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "sample step must be positive");
  std::vector<double> times;
  for (const auto& s : segments) {
    times.push_back(s.t0);
    const auto steps = static_cast<long>(std::floor(s.duration / dt));
    for (long i = 1; i <= steps; ++i) times.push_back(s.t0 + static_cast<double>(i) * dt);
    times.push_back(s.t0 + s.duration);
  }
  std::sort(times.begin(), times.end());
  std::vector<Waypoint> out;
  for (double t : times) {
    if (!out.empty() && t <= out.back().t + 1e-12) continue;
    out.push_back(at(t));
  }
  return out;
}

double TrialTrajectory::peak_acceleration(Phase phase) const {
  double peak = 0.0;
  for (const auto& s : segments) {
    if (s.phase == phase && s.phase != Phase::Rotate && s.profile) peak = std::max(peak, s.profile->accel);
  }
  return peak;
}

TrialTrajectory build_trial_trajectory(const TrialProtocol& p, double accel) {
  if (!(accel > 0.0)) throw Error(ErrorKind::InfeasibleProfile, "acceleration must be positive");
  if (p.cycles < 0) throw Error(ErrorKind::InfeasibleProfile, "cycle count must be nonnegative");
  if (!(p.grasp_hold >= 0.0)) throw Error(ErrorKind::InfeasibleProfile, "grasp hold must be >= 0");
  const double a = accel * 1000.0;  // mm/s^2

  TrialTrajectory traj;
  double t = 0.0;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();

  const auto push = [&](Segment s) {
    s.t0 = t;
    s.start = pos;
    s.orientation0 = q;
    if (s.profile) s.duration = s.profile->duration();
    t += s.duration;
    const Waypoint end = segment_end(s);
    pos = end.position;
    q = end.orientation;
    traj.segments.push_back(std::move(s));
  };
  const auto move = [&](Phase phase, std::string label, const Eigen::Vector3d& dir, double dist) {
    Segment s;
    s.phase = phase;
    s.label = std::move(label);
    s.direction = dir;
    s.profile = make_trapezoid(dist, p.speed, a);
    push(std::move(s));
  };
  const auto rotate = [&](std::string label, const Eigen::Vector3d& axis, double degrees) {
    Segment s;
    s.phase = Phase::Rotate;
    s.label = std::move(label);
    s.rotation_axis = axis;
    s.profile = make_trapezoid(degrees, p.rotation_speed, p.rotation_accel);
    push(std::move(s));
  };

  Segment hold;
  hold.phase = Phase::Grasp;
  hold.label = "grasp";
  hold.duration = p.grasp_hold;
  push(std::move(hold));

  // world z points toward the table, as the platform z does
  move(Phase::Lift, "lift", -Eigen::Vector3d::UnitZ(), p.lift);
  for (int c = 0; c < p.cycles; ++c) {
    move(Phase::Translate, "translate " + std::to_string(c + 1) + " out", Eigen::Vector3d::UnitX(),
         p.translate);
    move(Phase::Translate, "translate " + std::to_string(c + 1) + " back", -Eigen::Vector3d::UnitX(),
         p.translate);
  }
  rotate("rotate y", Eigen::Vector3d::UnitY(), p.rotate_y);
  rotate("rotate z", Eigen::Vector3d::UnitZ(), p.rotate_z);
  return traj;
}

// ---------------------------------------------------------------------------
// Slip

SlipPrediction predict_slip(const FoodItem& item, const PinchPlan& plan,
                            const TrialTrajectory& trajectory, double g, double safety) {
  const double m = item.mass_g / 1000.0;  // kg; kg * mm/s^2 = mN
  const double available = 2.0 * item.mu * plan.grip_force;
  const Eigen::Vector3d gravity = g * Eigen::Vector3d::UnitZ();

  std::map<Phase, double> required;
  for (const auto& s : trajectory.segments) {
    double r = 0.0;
    switch (s.phase) {
      case Phase::Grasp:
        r = m * g;
        break;
      case Phase::Lift:
      case Phase::Translate:
        r = m * (g + (s.profile ? s.profile->accel : 0.0));
        break;
      case Phase::Rotate: {
        const double total = s.profile ? s.profile->distance : 0.0;
        const int steps = static_cast<int>(std::ceil(total));
        for (int i = 0; i <= steps; ++i) {
          const double deg = std::min(static_cast<double>(i), total);
          const Eigen::Quaterniond q =
              s.orientation0 * Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, s.rotation_axis);
          const Eigen::Vector3d body = q.conjugate() * gravity;
          const Eigen::Vector3d perp = body - body.dot(plan.grasp_axis) * plan.grasp_axis;
          r = std::max(r, m * perp.norm());
        }
        break;
      }
    }
    required[s.phase] = std::max(required[s.phase], r / 1000.0);
  }

  SlipPrediction out;
  out.rotation_hold = true;
  out.translation_hold = true;
  out.margin = std::numeric_limits<double>::infinity();
  for (const auto& [phase, req] : required) {
    const PhaseVerdict v{phase, req, available, available >= safety * req};
    out.phases.push_back(v);
    if (!v.hold && phase != Phase::Translate) out.rotation_hold = false;
    if (!v.hold && phase != Phase::Rotate) out.translation_hold = false;
    const double ratio = req > 0.0 ? available / req : std::numeric_limits<double>::infinity();
    if (ratio < out.margin) {
      out.margin = ratio;
      out.limiting = phase;
    }
  }
  return out;
}

std::vector<TrialRow> run_trial_suite(const DualConfig& config, std::span<const FoodItem> items,
                                      const TrialSettings& settings) {
  const auto traj = build_trial_trajectory(settings.protocol, settings.accel);
  std::vector<TrialRow> rows;
  for (const auto& item : items) {
    TrialRow row;
    row.item = item;
    const auto override_it = settings.grip_overrides.find(item.name);
    row.grip_force = override_it != settings.grip_overrides.end() ? override_it->second
                                                                  : settings.grip_force;
    try {
      item.validate();
      const auto plan = plan_pinch(config, settings.center, item.width(), row.grip_force, item.k);
      row.prediction = predict_slip(item, plan, traj);
    } catch (const Error& e) {
      row.error = e.kind();
      row.error_message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string yn(bool b) { return b ? "Y" : "N"; }

}  // namespace

std::string render_trial_csv(std::span<const TrialRow> rows) {
  std::ostringstream out;
  out << "name,mass_g,width,mu,k,grip_force,rot,lin,limiting_phase,margin,error\n";
  for (const auto& r : rows) {
    out << r.item.name << ',' << text::format_double(r.item.mass_g) << ','
        << text::format_double(r.item.width()) << ',' << text::format_double(r.item.mu) << ','
        << text::format_double(r.item.k) << ',' << text::format_double(r.grip_force) << ',';
    if (r.prediction) {
      out << yn(r.prediction->rotation_hold) << ',' << yn(r.prediction->translation_hold) << ','
          << to_string(r.prediction->limiting) << ',' << text::format_fixed(r.prediction->margin, 4)
          << ",\n";
    } else {
      out << ",,,," << (r.error ? to_string(*r.error) : "") << '\n';
    }
  }
  return out.str();
}

std::string render_trial_json(std::span<const TrialRow> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j{{"name", r.item.name},   {"mass_g", r.item.mass_g},
                             {"width", r.item.width()}, {"mu", r.item.mu},
                             {"k", r.item.k},          {"grip_force", r.grip_force}};
    if (r.prediction) {
      j["rot"] = r.prediction->rotation_hold;
      j["lin"] = r.prediction->translation_hold;
      j["limiting_phase"] = std::string(to_string(r.prediction->limiting));
      j["margin"] = r.prediction->margin;
      auto phases = nlohmann::ordered_json::array();
      for (const auto& v : r.prediction->phases) {
        phases.push_back({{"phase", std::string(to_string(v.phase))},
                          {"required", v.required},
                          {"available", v.available},
                          {"hold", v.hold}});
      }
      j["phases"] = phases;
    } else {
      j["error"] = r.error ? std::string(to_string(*r.error)) : "";
      j["message"] = r.error_message;
    }
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace chopstick
