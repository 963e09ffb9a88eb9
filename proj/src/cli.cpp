#include "chopstick/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chopstick/error.hpp"
#include "chopstick/ft_sensing.hpp"
#include "chopstick/geometry.hpp"
#include "chopstick/grasp.hpp"
#include "chopstick/kinematics.hpp"
#include "chopstick/mechanism.hpp"
#include "chopstick/servo_bus.hpp"
#include "chopstick/validation.hpp"
#include "chopstick/workspace.hpp"

namespace chopstick::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool json_errors = false;
  std::string side = "left";
};

DualConfig load(const Globals& g) {
  return g.config.empty() ? default_dual_config() : load_config_file(g.config);
}

const MechanismParams& platform(const DualConfig& config, const Globals& g) {
  return g.side == "right" ? config.right : config.left;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

json pose_json(const TipPose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

json command_json(const PlatformCommand& c) {
  return {{"delta_p", c.delta_p}, {"delta_y", c.delta_y}, {"d_p", c.d_p}};
}

void print(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

struct IkArgs {
  double x = 0.0, y = 0.0, z = 0.0;
};

void cmd_ik(const Globals& g, const IkArgs& a, std::ostream& out) {
  const auto config = load(g);
  const TipPose target{a.x, a.y, a.z};
  const auto sol = inverse_kinematics(platform(config, g), target);
  json j;
  j["target"] = pose_json(target);
  j["command"] = command_json(sol.command);
  j["phi_deg"] = rad_to_deg(sol.dir.phi);
  j["psi_deg"] = rad_to_deg(sol.dir.psi);
  print(out, j);
}

struct FkArgs {
  double delta_p = 0.0, delta_y = 0.0, d_p = 0.0;
};

void cmd_fk(const Globals& g, const FkArgs& a, std::ostream& out) {
  const auto config = load(g);
  const PlatformCommand command{a.delta_p, a.delta_y, a.d_p};
  const auto sol = solve_forward(platform(config, g), command);
  json j;
  j["command"] = command_json(command);
  j["tip"] = pose_json(sol.tip);
  j["residual"] = sol.residual;
  print(out, j);
}

struct WorkspaceArgs {
  std::size_t n = 1000;
  std::vector<double> box;
  std::string out;
  std::string pairs_out;
  double epsilon = 0.25;
  double epsilon_linear = 0.0;
};

void cmd_workspace(const Globals& g, const WorkspaceArgs& a, std::ostream& out) {
  const auto config = load(g);
  const auto& params = platform(config, g);
  Box box = default_workspace_box(params);
  if (!a.box.empty()) {
    box.min = {a.box[0], a.box[1], a.box[2]};
    box.max = {a.box[3], a.box[4], a.box[5]};
  }
  const auto samples = sample_workspace(params, a.n, box, g.seed);

  std::size_t reachable = 0;
  std::vector<TipPose> targets;
  for (const auto& s : samples) {
    if (!s.reachable) continue;
    ++reachable;
    targets.push_back(s.target);
  }

  if (!a.pairs_out.empty()) {
    const BacklashModel model{a.epsilon, a.epsilon_linear, g.seed};
    const auto pairs = simulate_observed(params, targets, model);
    auto f = open_out(a.pairs_out);
    write_pose_pairs_csv(f, pairs);
  }

  if (a.out.empty()) {
    write_samples_csv(out, samples);
    return;
  }
  auto f = open_out(a.out);
  write_samples_csv(f, samples);
  json j;
  j["samples"] = samples.size();
  j["reachable"] = reachable;
  j["box"] = {{"min", {box.min.x(), box.min.y(), box.min.z()}},
              {"max", {box.max.x(), box.max.y(), box.max.z()}}};
  print(out, j);
}

struct HullArgs {
  std::string in;
  std::string mesh;
};

void cmd_hull(const HullArgs& a, std::ostream& out) {
  auto f = open_in(a.in);
  const auto samples = read_samples_csv(f);
  const auto points = reachable_points(samples);
  const auto hull = convex_hull(points);

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) worst = std::max(worst, hull.signed_distance(p));

  if (!a.mesh.empty()) {
    auto m = open_out(a.mesh);
    write_off(m, hull);
  }
  json j;
  j["samples"] = samples.size();
  j["points"] = points.size();
  j["vertices"] = hull.vertices.size();
  j["faces"] = hull.faces.size();
  j["edges"] = hull.edge_count();
  j["volume"] = hull.volume;
  j["max_signed_distance"] = worst;
  j["contains_all"] = worst <= kHullTolerance;
  print(out, j);
}

struct ValidateArgs {
  std::string in;
  std::string format = "text";
};

void cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto records = ingest_csv_file(a.in);
  const auto report = error_report(records);
  out << render_report(report, *parse_report_format(a.format));
}

struct FtSimArgs {
  std::string materials;
  std::string out_dir;
  int cycles = 8;
  double rest_width = 20.0;
};

void cmd_ft_sim(const Globals& g, const FtSimArgs& a, std::ostream& out) {
  std::vector<Material> materials = default_materials();
  if (!a.materials.empty()) {
    auto f = open_in(a.materials);
    materials = read_materials_csv(f);
  }
  for (const auto& m : materials) {
    if (m.name.empty() || m.name.find_first_of("/\\") != std::string::npos || m.name == "." ||
        m.name == "..") {
      throw Error(ErrorKind::InvalidParameter, "material name '" + m.name + "' is not a file name");
    }
  }

  const SensorModel model;
  GripProtocol protocol;
  protocol.cycles = a.cycles;
  const auto results = run_material_study(model, materials, protocol, a.rest_width, g.seed);

  fs::create_directories(a.out_dir);
  const auto closure = grip_closure(protocol, a.rest_width, model.rate_hz);
  json list = json::array();
  for (std::size_t i = 0; i < materials.size(); ++i) {
    const GripCycle cycle{closure, materials[i].k, a.rest_width, 40.0};
    const auto stream = simulate_grip_cycle(model, cycle, g.seed + i);
    const fs::path dir(a.out_dir);
    const auto samples_path = dir / (materials[i].name + ".samples.csv");
    const auto closure_path = dir / (materials[i].name + ".closure.csv");
    {
      auto f = open_out(samples_path);
      write_ft_samples_csv(f, stream);
    }
    {
      auto f = open_out(closure_path);
      write_closure_csv(f, closure, model.rate_hz);
    }
    const auto& r = results[i];
    json m;
    m["name"] = r.material.name;
    m["k"] = r.material.k;
    m["events"] = r.events;
    m["k_hat"] = r.k_hat;
    m["k_hat_mean"] = r.k_hat_mean;
    m["peak_force"] = r.peak_force;
    m["samples"] = samples_path.filename().string();
    m["closure"] = closure_path.filename().string();
    list.push_back(std::move(m));
  }
  json j;
  j["force_lsb"] = model.force_lsb();
  j["rate_hz"] = model.rate_hz;
  j["materials"] = std::move(list);
  j["ordering_inversions"] = ordering_inversions(results);
  print(out, j);
}

struct StiffnessArgs {
  std::string samples;
  std::string closure;
  double tare_window = 0.2;
};

void cmd_stiffness(const StiffnessArgs& a, std::ostream& out) {
  auto fs_in = open_in(a.samples);
  const auto stream = read_ft_samples_csv(fs_in);
  auto fc_in = open_in(a.closure);
  const auto closure = read_closure_csv(fc_in);

  StiffnessOptions options;
  options.tare_window = a.tare_window;
  const auto est = estimate_stiffness(stream, closure, options);
  const auto per_event = estimate_stiffness_per_event(stream, closure, options);

  json events = json::array();
  for (const auto& e : per_event) {
    events.push_back({{"onset", e.contact_onset}, {"k_hat", e.k_hat}, {"r_squared", e.r_squared},
                      {"samples", e.samples}});
  }
  json j;
  j["k_hat"] = est.k_hat;
  j["r_squared"] = est.r_squared;
  j["contact_onset"] = est.contact_onset;
  j["samples"] = est.samples;
  j["events"] = std::move(events);
  print(out, j);
}

struct GraspArgs {
  std::string items;
  double grip_force = 2.0;
  double accel = 1.0;
  std::vector<double> center;
  std::string format = "csv";
};

void cmd_grasp_sim(const Globals& g, const GraspArgs& a, std::ostream& out) {
  const auto config = load(g);
  auto f = open_in(a.items);
  const auto items = read_food_items_csv(f);
  TrialSettings settings;
  settings.grip_force = a.grip_force;
  settings.accel = a.accel;
  if (!a.center.empty()) settings.center = {a.center[0], a.center[1], a.center[2]};
  const auto rows = run_trial_suite(config, items, settings);
  out << (a.format == "json" ? render_trial_json(rows) : render_trial_csv(rows));
}

struct BusArgs {
  double x = 0.0, y = 0.0;
  std::optional<double> z;
  double deadband = 0.25;
  double settle = 1.0;
  std::string dump;
};

void cmd_bus_demo(const Globals& g, const BusArgs& a, std::ostream& out) {
  const auto config = load(g);
  const TipPose target{a.x, a.y, a.z.value_or(zero_pose_z(config.left))};
  bus::LoopbackBus::Options options;
  options.deadband = a.deadband;
  const auto r = bus::run_bus_demo(config, target, options, a.settle);

  if (!a.dump.empty()) {
    auto f = open_out(a.dump);
    f << "# sent\n";
    for (const auto& frame : r.sent) f << bus::hex_dump(frame) << '\n';
    f << "# received\n";
    for (const auto& frame : r.received) f << bus::hex_dump(frame) << '\n';
  }
  json j;
  j["target"] = pose_json(r.target);
  j["commanded"] = command_json(r.commanded);
  j["settled"] = command_json(r.settled);
  j["reached"] = pose_json(r.reached);
  j["error"] = r.error;
  j["bound"] = r.bound;
  j["within_bound"] = r.error <= r.bound;
  j["frames_sent"] = r.sent.size();
  j["frames_received"] = r.received.size();
  print(out, j);
}

void report_error(std::ostream& err, bool as_json, std::string_view kind, const std::string& what) {
  if (as_json) {
    err << json{{"error", kind}, {"message", what}}.dump() << '\n';
  } else {
    err << "error: " << kind << ": " << what << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kinematics, workspace, sensing and grasp toolkit for a dual chopstick end effector",
               "chopstick"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--json-errors", g.json_errors, "Report domain errors as JSON on stderr");
  app.add_option("--side", g.side, "Platform for ik, fk and workspace")
      ->check(CLI::IsMember({"left", "right"}));

  IkArgs ik;
  auto* ik_cmd = app.add_subcommand("ik", "Inverse kinematics for a tip target");
  ik_cmd->add_option("--x", ik.x)->required();
  ik_cmd->add_option("--y", ik.y)->required();
  ik_cmd->add_option("--z", ik.z)->required();

  FkArgs fk;
  auto* fk_cmd = app.add_subcommand("fk", "Forward kinematics for a servo command");
  fk_cmd->add_option("--delta-p", fk.delta_p, "Pitch horn angle, degrees")->required();
  fk_cmd->add_option("--delta-y", fk.delta_y, "Yaw horn angle, degrees")->required();
  fk_cmd->add_option("--d-p", fk.d_p, "Platform travel, mm")->required();

  WorkspaceArgs ws;
  auto* ws_cmd = app.add_subcommand("workspace", "Sample the workspace box and test reachability");
  ws_cmd->add_option("--n", ws.n, "Number of samples")->check(CLI::PositiveNumber);
  ws_cmd->add_option("--box", ws.box, "xmin ymin zmin xmax ymax zmax")->expected(6);
  ws_cmd->add_option("--out", ws.out, "Sample CSV path, stdout when omitted");
  ws_cmd->add_option("--pairs-out", ws.pairs_out, "Write simulated commanded/observed pairs");
  ws_cmd->add_option("--epsilon", ws.epsilon, "Servo backlash half-width, degrees");
  ws_cmd->add_option("--epsilon-linear", ws.epsilon_linear, "Travel backlash half-width, mm");

  HullArgs hull;
  auto* hull_cmd = app.add_subcommand("hull", "Convex hull of reachable samples");
  hull_cmd->add_option("--in", hull.in, "Sample CSV")->required()->check(CLI::ExistingFile);
  hull_cmd->add_option("--mesh", hull.mesh, "OFF mesh output path");

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Error report from commanded/observed pairs");
  val_cmd->add_option("--in", val.in, "Pose-pair CSV")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--format", val.format)->check(CLI::IsMember({"text", "json", "csv"}));

  FtSimArgs ft;
  auto* ft_cmd = app.add_subcommand("ft-sim", "Simulate grip cycles on a set of materials");
  ft_cmd->add_option("--materials", ft.materials, "CSV name,k; built-in set when omitted")
      ->check(CLI::ExistingFile);
  ft_cmd->add_option("--out-dir", ft.out_dir, "Directory for sample and closure CSVs")->required();
  ft_cmd->add_option("--cycles", ft.cycles)->check(CLI::PositiveNumber);
  ft_cmd->add_option("--rest-width", ft.rest_width, "mm")->check(CLI::PositiveNumber);

  StiffnessArgs st;
  auto* st_cmd = app.add_subcommand("stiffness", "Estimate stiffness from a sensor stream");
  st_cmd->add_option("--samples", st.samples)->required()->check(CLI::ExistingFile);
  st_cmd->add_option("--closure", st.closure)->required()->check(CLI::ExistingFile);
  st_cmd->add_option("--tare-window", st.tare_window, "s")->check(CLI::PositiveNumber);

  GraspArgs gr;
  auto* gr_cmd = app.add_subcommand("grasp-sim", "Predict slip over the trial protocol");
  gr_cmd->add_option("--items", gr.items, "Food item CSV")->required()->check(CLI::ExistingFile);
  gr_cmd->add_option("--grip-force", gr.grip_force, "N");
  gr_cmd->add_option("--accel", gr.accel, "m/s^2");
  gr_cmd->add_option("--center", gr.center, "x y z in the end-effector frame")->expected(3);
  gr_cmd->add_option("--format", gr.format)->check(CLI::IsMember({"csv", "json"}));

  BusArgs bs;
  auto* bus_cmd = app.add_subcommand("bus-demo", "Drive simulated servos over the serial protocol");
  bus_cmd->add_option("--x", bs.x)->required();
  bus_cmd->add_option("--y", bs.y)->required();
  bus_cmd->add_option("--z", bs.z, "Defaults to the zero-pose Z");
  bus_cmd->add_option("--deadband", bs.deadband, "degrees")->check(CLI::NonNegativeNumber);
  bus_cmd->add_option("--settle", bs.settle, "s")->check(CLI::PositiveNumber);
  bus_cmd->add_option("--dump", bs.dump, "Frame dump output path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ik_cmd->parsed()) cmd_ik(g, ik, out);
    else if (fk_cmd->parsed()) cmd_fk(g, fk, out);
    else if (ws_cmd->parsed()) cmd_workspace(g, ws, out);
    else if (hull_cmd->parsed()) cmd_hull(hull, out);
    else if (val_cmd->parsed()) cmd_validate(val, out);
    else if (ft_cmd->parsed()) cmd_ft_sim(g, ft, out);
    else if (st_cmd->parsed()) cmd_stiffness(st, out);
    else if (gr_cmd->parsed()) cmd_grasp_sim(g, gr, out);
    else if (bus_cmd->parsed()) cmd_bus_demo(g, bs, out);
  } catch (const Error& e) {
    report_error(err, g.json_errors, to_string(e.kind()), e.what());
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    report_error(err, g.json_errors, to_string(ErrorKind::IoError), e.what());
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace chopstick::cli
