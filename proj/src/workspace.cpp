#include "chopstick/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "chopstick/kinematics.hpp"
#include "chopstick/text.hpp"

namespace chopstick {

Box default_workspace_box(const MechanismParams& params) {
  const double z0 = zero_pose_z(params);
  return {{-40.0, -40.0, z0}, {40.0, 40.0, z0 + 35.0}};
}

std::vector<WorkspaceSample> sample_workspace(const MechanismParams& params, std::size_t n,
                                              const Box& box, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::InvalidParameter, "sample count must be positive");
  if (!((box.max - box.min).array() >= 0.0).all() || !(box.volume() > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "sampling box is degenerate");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<WorkspaceSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) p[k] = box.min[k] + unit(rng) * (box.max[k] - box.min[k]);
    WorkspaceSample s{TipPose::from(p), false, std::nullopt};
    try {
      inverse_kinematics(params, s.target);
      s.reachable = true;
    } catch (const Error& e) {
      s.failure = e.kind();
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Eigen::Vector3d> reachable_points(std::span<const WorkspaceSample> samples) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& s : samples) {
    if (s.reachable) out.push_back(s.target.vec());
  }
  return out;
}

void write_samples_csv(std::ostream& out, std::span<const WorkspaceSample> samples) {
  out << "x,y,z,reachable,failure\n";
  for (const auto& s : samples) {
    out << text::format_double(s.target.x) << ',' << text::format_double(s.target.y) << ','
        << text::format_double(s.target.z) << ',' << (s.reachable ? 1 : 0) << ','
        << (s.failure ? to_string(*s.failure) : "") << '\n';
  }
}

std::vector<WorkspaceSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyFile, "sample file is empty");
  const auto header = text::split(text::trim(line), ',');
  const std::array<std::string_view, 4> expected{"x", "y", "z", "reachable"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size() || text::trim(header[i]) != expected[i]) {
      throw Error(ErrorKind::MissingColumn,
                  "sample file: expected column '" + std::string(expected[i]) + "'");
    }
  }

  std::vector<WorkspaceSample> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < 4) {
      throw Error(ErrorKind::MissingColumn, "sample file line " + std::to_string(line_no) +
                                                ": expected at least 4 fields");
    }
    WorkspaceSample s;
    double v[4];
    for (int k = 0; k < 4; ++k) {
      const auto parsed = text::parse_double(fields[k]);
      if (!parsed) {
        throw Error(ErrorKind::NonNumericField,
                    "sample file line " + std::to_string(line_no) + ", column " +
                        std::to_string(k + 1) + ": not a number");
      }
      v[k] = *parsed;
    }
    s.target = {v[0], v[1], v[2]};
    s.reachable = v[3] != 0.0;
    if (!s.reachable) s.failure = ErrorKind::ParseError;
    if (fields.size() > 4 && !s.reachable) {
      const auto name = text::trim(fields[4]);
      for (int k = 0; k <= static_cast<int>(ErrorKind::IoError); ++k) {
        if (to_string(static_cast<ErrorKind>(k)) == name) s.failure = static_cast<ErrorKind>(k);
      }
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convex hull

namespace {

struct Face {
  std::array<int, 3> v;
  Eigen::Vector3d normal;
  double offset = 0.0;  // normal . p + offset = signed distance
  std::vector<int> outside;
  bool alive = true;

  double distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
};

Face make_face(std::span<const Eigen::Vector3d> pts, int a, int b, int c) {
  Face f;
  f.v = {a, b, c};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.offset = -f.normal.dot(pts[a]);
  return f;
}

std::array<int, 4> initial_simplex(std::span<const Eigen::Vector3d> pts) {
  // most distant pair among the six axis extremes
  std::array<int, 6> extremes{};
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i][axis] < pts[extremes[2 * axis]][axis]) extremes[2 * axis] = static_cast<int>(i);
      if (pts[i][axis] > pts[extremes[2 * axis + 1]][axis]) extremes[2 * axis + 1] = static_cast<int>(i);
    }
  }
  int a = extremes[0];
  int b = extremes[1];
  double best = -1.0;
  for (int i : extremes) {
    for (int j : extremes) {
      const double d = (pts[i] - pts[j]).squaredNorm();
      if (d > best) {
        best = d;
        a = i;
        b = j;
      }
    }
  }
  if (std::sqrt(best) <= kHullTolerance) {
    throw Error(ErrorKind::Degenerate, "convex hull input is a single point");
  }

  const Eigen::Vector3d dir = (pts[b] - pts[a]).normalized();
  int c = -1;
  best = kHullTolerance;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d w = pts[i] - pts[a];
    const double d = (w - w.dot(dir) * dir).norm();
    if (d > best) {
      best = d;
      c = static_cast<int>(i);
    }
  }
  if (c < 0) throw Error(ErrorKind::Degenerate, "convex hull input is collinear");

  const Eigen::Vector3d n = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  int d = -1;
  best = kHullTolerance;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dist = std::abs(n.dot(pts[i] - pts[a]));
    if (dist > best) {
      best = dist;
      d = static_cast<int>(i);
    }
  }
  if (d < 0) throw Error(ErrorKind::Degenerate, "convex hull input is coplanar");
  return {a, b, c, d};
}

}  // namespace

double ConvexHull3::signed_distance(const Eigen::Vector3d& p) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : faces) {
    const Eigen::Vector3d& a = vertices[f[0]];
    const Eigen::Vector3d n = (vertices[f[1]] - a).cross(vertices[f[2]] - a).normalized();
    worst = std::max(worst, n.dot(p - a));
  }
  return worst;
}

ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> pts) {
  if (pts.size() < 4) throw Error(ErrorKind::Degenerate, "convex hull needs at least 4 points");
  const auto simplex = initial_simplex(pts);

  std::vector<Face> faces;
  const Eigen::Vector3d inner =
      (pts[simplex[0]] + pts[simplex[1]] + pts[simplex[2]] + pts[simplex[3]]) / 4.0;
  const auto add_oriented = [&](int a, int b, int c) {
    Face f = make_face(pts, a, b, c);
    if (f.distance(inner) > 0.0) f = make_face(pts, a, c, b);
    faces.push_back(std::move(f));
  };
  add_oriented(simplex[0], simplex[1], simplex[2]);
  add_oriented(simplex[0], simplex[1], simplex[3]);
  add_oriented(simplex[0], simplex[2], simplex[3]);
  add_oriented(simplex[1], simplex[2], simplex[3]);

  const auto assign = [&](int p, std::size_t first_face) {
    for (std::size_t f = first_face; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].distance(pts[p]) > kHullTolerance) {
        faces[f].outside.push_back(p);
        return;
      }
    }
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int p = static_cast<int>(i);
    if (std::find(simplex.begin(), simplex.end(), p) != simplex.end()) continue;
    assign(p, 0);
  }

  std::set<std::pair<int, int>> visible_edges;
  for (std::size_t current = 0; current < faces.size(); ++current) {
    if (!faces[current].alive || faces[current].outside.empty()) continue;

    // furthest outside point of this face is the next hull vertex
    const auto& candidates = faces[current].outside;
    const int eye = *std::max_element(candidates.begin(), candidates.end(), [&](int a, int b) {
      return faces[current].distance(pts[a]) < faces[current].distance(pts[b]);
    });

    std::vector<std::size_t> visible;
    visible_edges.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].distance(pts[eye]) > kHullTolerance) {
        visible.push_back(f);
        const auto& v = faces[f].v;
        for (int k = 0; k < 3; ++k) visible_edges.emplace(v[k], v[(k + 1) % 3]);
      }
    }

    std::vector<int> orphans;
    for (std::size_t f : visible) {
      faces[f].alive = false;
      for (int p : faces[f].outside) {
        if (p != eye) orphans.push_back(p);
      }
      faces[f].outside.clear();
      faces[f].outside.shrink_to_fit();
    }

    const std::size_t first_new = faces.size();
    for (const auto& [a, b] : visible_edges) {
      if (visible_edges.count({b, a}) == 0) faces.push_back(make_face(pts, a, b, eye));
    }
    for (int p : orphans) assign(p, first_new);
    // restart the scan: new faces sit at the end, older live faces may still hold points
    current = static_cast<std::size_t>(-1);
  }

  // compact into the output mesh
  ConvexHull3 hull;
  std::vector<int> remap(pts.size(), -1);
  for (const auto& f : faces) {
    if (!f.alive) continue;
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      int& slot = remap[f.v[k]];
      if (slot < 0) {
        slot = static_cast<int>(hull.vertices.size());
        hull.vertices.push_back(pts[f.v[k]]);
      }
      tri[k] = slot;
    }
    hull.faces.push_back(tri);
  }

  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  for (const auto& v : hull.vertices) ref += v;
  ref /= static_cast<double>(hull.vertices.size());
  double six_v = 0.0;
  for (const auto& f : hull.faces) {
    const Eigen::Vector3d a = hull.vertices[f[0]] - ref;
    const Eigen::Vector3d b = hull.vertices[f[1]] - ref;
    const Eigen::Vector3d c = hull.vertices[f[2]] - ref;
    six_v += a.dot(b.cross(c));
  }
  hull.volume = six_v / 6.0;
  return hull;
}

void write_off(std::ostream& out, const ConvexHull3& hull) {
  out << "OFF\n" << hull.vertices.size() << ' ' << hull.faces.size() << " 0\n";
  for (const auto& v : hull.vertices) {
    out << text::format_double(v.x()) << ' ' << text::format_double(v.y()) << ' '
        << text::format_double(v.z()) << '\n';
  }
  for (const auto& f : hull.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

// ---------------------------------------------------------------------------
// Backlash

std::vector<PosePair> simulate_observed(const MechanismParams& params,
                                        std::span<const TipPose> targets,
                                        const BacklashModel& model) {
  if (model.epsilon_servo < 0.0 || model.epsilon_linear < 0.0) {
    throw Error(ErrorKind::InvalidParameter, "backlash half-widths must be nonnegative");
  }
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<PosePair> out;
  out.reserve(targets.size());
  for (const auto& target : targets) {
    PlatformCommand cmd = inverse_kinematics(params, target).command;
    // three draws per target regardless of settings keeps streams aligned across models
    const double ep = unit(rng);
    const double ey = unit(rng);
    const double el = unit(rng);
    cmd.delta_p = std::clamp(cmd.delta_p + ep * model.epsilon_servo, params.servo_rom.min,
                             params.servo_rom.max);
    cmd.delta_y = std::clamp(cmd.delta_y + ey * model.epsilon_servo, params.servo_rom.min,
                             params.servo_rom.max);
    cmd.d_p = std::clamp(cmd.d_p + el * model.epsilon_linear, params.linear_travel.min,
                         params.linear_travel.max);
    out.push_back({target, forward_kinematics(params, cmd)});
  }
  return out;
}

}  // namespace chopstick
