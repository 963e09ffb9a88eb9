#include "chopstick/mechanism.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "chopstick/error.hpp"
#include "chopstick/text.hpp"

namespace chopstick {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, message);
}

void require_positive(double v, std::string_view field) {
  require(std::isfinite(v) && v > 0.0,
          std::string(field) + " must be a positive length (got " + text::format_double(v) + ")");
}

// Keys accepted per platform, in the order they are serialized.
const std::vector<std::string_view>& platform_keys() {
  static const std::vector<std::string_view> keys = {
      "l_c",           "l_j",           "l_p",         "l_y",         "z_offset",
      "pitch_pivot_y", "pitch_pivot_z", "yaw_pivot_x", "yaw_pivot_z", "servo_rom_min",
      "servo_rom_max", "travel_min",    "travel_max",  "leadscrew_lead", "fk_max_tilt",
  };
  return keys;
}

bool is_platform_key(std::string_view key) {
  for (auto k : platform_keys()) {
    if (k == key) return true;
  }
  return false;
}

using RawValues = std::map<std::string, double, std::less<>>;

MechanismParams build_platform(const RawValues& raw, std::string_view side) {
  const auto lookup = [&](std::string_view key) -> std::optional<double> {
    const std::string prefixed = std::string(side) + "." + std::string(key);
    if (auto it = raw.find(prefixed); it != raw.end()) return it->second;
    if (auto it = raw.find(key); it != raw.end()) return it->second;
    return std::nullopt;
  };
  const auto required = [&](std::string_view key) {
    auto v = lookup(key);
    if (!v) {
      throw Error(ErrorKind::MissingField,
                  "missing required field '" + std::string(key) + "' for " + std::string(side) +
                      " platform");
    }
    return *v;
  };

  MechanismParams p;
  p.l_c = required("l_c");
  p.l_j = required("l_j");
  p.l_p = required("l_p");
  p.l_y = required("l_y");
  p.z_offset = lookup("z_offset").value_or(0.0);
  p.pitch_pivot = {lookup("pitch_pivot_y").value_or(-p.l_j), lookup("pitch_pivot_z").value_or(0.0)};
  p.yaw_pivot = {lookup("yaw_pivot_x").value_or(-p.l_j), lookup("yaw_pivot_z").value_or(0.0)};
  p.servo_rom = {lookup("servo_rom_min").value_or(-90.0), lookup("servo_rom_max").value_or(90.0)};
  p.linear_travel = {lookup("travel_min").value_or(0.0), lookup("travel_max").value_or(35.0)};
  p.leadscrew_lead = lookup("leadscrew_lead").value_or(2.0);
  p.fk_max_tilt_deg = lookup("fk_max_tilt").value_or(45.0);
  return p;
}

void write_platform(std::ostringstream& out, const MechanismParams& p, std::string_view side) {
  const auto line = [&](std::string_view key, double v) {
    out << side << '.' << key << " = " << text::format_double(v) << '\n';
  };
  line("l_c", p.l_c);
  line("l_j", p.l_j);
  line("l_p", p.l_p);
  line("l_y", p.l_y);
  line("z_offset", p.z_offset);
  line("pitch_pivot_y", p.pitch_pivot.x());
  line("pitch_pivot_z", p.pitch_pivot.y());
  line("yaw_pivot_x", p.yaw_pivot.x());
  line("yaw_pivot_z", p.yaw_pivot.y());
  line("servo_rom_min", p.servo_rom.min);
  line("servo_rom_max", p.servo_rom.max);
  line("travel_min", p.linear_travel.min);
  line("travel_max", p.linear_travel.max);
  line("leadscrew_lead", p.leadscrew_lead);
  line("fk_max_tilt", p.fk_max_tilt_deg);
}

}  // namespace

void MechanismParams::validate() const {
  require_positive(l_c, "l_c");
  require_positive(l_j, "l_j");
  require_positive(l_p, "l_p");
  require_positive(l_y, "l_y");
  require_positive(leadscrew_lead, "leadscrew_lead");
  require(std::isfinite(z_offset), "z_offset must be finite");
  require(pitch_pivot.allFinite() && yaw_pivot.allFinite(), "servo pivots must be finite");
  require(linear_travel.min >= 0.0, "linear_travel lower bound must be >= 0");
  require(linear_travel.max > linear_travel.min, "linear_travel must be a nonempty interval");
  require(servo_rom.min < servo_rom.max, "servo_rom must be a nonempty interval");
  require(servo_rom.contains(0.0), "servo_rom must contain 0");
  require(servo_rom.min >= -180.0 && servo_rom.max <= 180.0, "servo_rom must lie within [-180, 180]");
  require(fk_max_tilt_deg > 0.0 && fk_max_tilt_deg < 90.0, "fk_max_tilt must lie in (0, 90)");
  require(l_j < l_p + pitch_pivot.norm(),
          "l_j must be shorter than l_p + |pitch_pivot| for the pitch linkage to assemble");
  require(l_j < l_y + yaw_pivot.norm(),
          "l_j must be shorter than l_y + |yaw_pivot| for the yaw linkage to assemble");
}

bool MechanismParams::operator==(const MechanismParams& o) const {
  return l_c == o.l_c && l_j == o.l_j && l_p == o.l_p && l_y == o.l_y && z_offset == o.z_offset &&
         pitch_pivot == o.pitch_pivot && yaw_pivot == o.yaw_pivot && servo_rom == o.servo_rom &&
         linear_travel == o.linear_travel && leadscrew_lead == o.leadscrew_lead &&
         fk_max_tilt_deg == o.fk_max_tilt_deg;
}

void DualConfig::validate() const {
  require_positive(baseline, "baseline");
  left.validate();
  right.validate();
}

bool DualConfig::operator==(const DualConfig& o) const {
  return left == o.left && right == o.right && baseline == o.baseline && mirror == o.mirror;
}

double TipPose::radial() const { return std::hypot(x, y); }

MechanismParams default_params() {
  MechanismParams p;
  p.pitch_pivot = {-p.l_j, 0.0};
  p.yaw_pivot = {-p.l_j, 0.0};
  return p;
}

DualConfig default_dual_config() {
  DualConfig c;
  c.left = default_params();
  c.right = default_params();
  return c;
}

double zero_pose_z(const MechanismParams& params) { return params.l_c + params.z_offset; }

DualConfig load_config(std::string_view document) {
  RawValues raw;
  std::optional<double> baseline;
  std::optional<bool> mirror;

  int line_no = 0;
  for (auto line : text::split(document, '\n')) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, where + "expected 'key = value'");
    }
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));

    if (key == "mirror") {
      if (value == "true") mirror = true;
      else if (value == "false") mirror = false;
      else throw Error(ErrorKind::ParseError, where + "mirror must be true or false");
      continue;
    }
    const auto number = text::parse_double(value);
    if (!number) {
      throw Error(ErrorKind::ParseError,
                  where + "value of '" + std::string(key) + "' is not a number");
    }
    if (key == "baseline") {
      baseline = *number;
      continue;
    }

    std::string_view bare = key;
    if (key.starts_with("left.")) bare = key.substr(5);
    else if (key.starts_with("right.")) bare = key.substr(6);
    if (!is_platform_key(bare)) {
      throw Error(ErrorKind::ParseError, where + "unknown key '" + std::string(key) + "'");
    }
    if (!raw.emplace(std::string(key), *number).second) {
      throw Error(ErrorKind::ParseError, where + "duplicate key '" + std::string(key) + "'");
    }
  }

  DualConfig config;
  config.left = build_platform(raw, "left");
  config.right = build_platform(raw, "right");
  config.baseline = baseline.value_or(100.0);
  config.mirror = mirror.value_or(true);
  config.validate();
  return config;
}

DualConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

std::string serialize_config(const DualConfig& config) {
  std::ostringstream out;
  out << "# units: mm, degrees\n";
  out << "baseline = " << text::format_double(config.baseline) << '\n';
  out << "mirror = " << (config.mirror ? "true" : "false") << '\n';
  write_platform(out, config.left, "left");
  write_platform(out, config.right, "right");
  return out.str();
}

}  // namespace chopstick
