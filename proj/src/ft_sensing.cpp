#include "chopstick/ft_sensing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "chopstick/error.hpp"
#include "chopstick/text.hpp"
#include "chopstick/validation.hpp"

namespace chopstick {

void SensorModel::validate() const {
  if (!(full_scale_force > 0.0) || !(full_scale_torque > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "sensor full scale must be positive");
  }
  if (resolution_bits < 1 || resolution_bits > 30) {
    throw Error(ErrorKind::InvalidParameter, "sensor resolution must be 1..30 bits");
  }
  if (!(rate_hz > 0.0)) throw Error(ErrorKind::InvalidParameter, "sensor rate must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(drift_rate)) {
    throw Error(ErrorKind::InvalidParameter, "sensor noise must be nonnegative");
  }
}

double SensorModel::force_lsb() const {
  return 2.0 * full_scale_force / std::ldexp(1.0, resolution_bits);
}

double SensorModel::torque_lsb() const {
  return 2.0 * full_scale_torque / std::ldexp(1.0, resolution_bits);
}

double quantize_channel(double value, double full_scale, int bits, bool& saturated) {
  const double lsb = 2.0 * full_scale / std::ldexp(1.0, bits);
  const double k_max = std::ldexp(1.0, bits - 1);
  const double k_min = -(k_max - 1.0);
  double k = std::round(value / lsb);
  if (std::isnan(value)) k = 0.0;
  if (std::abs(value) > full_scale || std::isnan(value) || k > k_max || k < k_min) {
    saturated = true;
  }
  return std::clamp(k, k_min, k_max) * lsb;
}

FtSample quantize(const SensorModel& model, const FtSample& s) {
  FtSample q = s;
  q.quantized = true;
  for (int i = 0; i < 3; ++i) {
    q.force[i] = quantize_channel(s.force[i], model.full_scale_force, model.resolution_bits,
                                  q.saturated);
    q.torque[i] = quantize_channel(s.torque[i], model.full_scale_torque, model.resolution_bits,
                                   q.saturated);
  }
  return q;
}

Bias tare(std::span<const FtSample> stream, double window_s, std::size_t min_samples) {
  Bias bias;
  std::size_t n = 0;
  if (!stream.empty()) {
    const double end = stream.front().t + window_s;
    for (const auto& s : stream) {
      if (s.t >= end) break;
      bias.force += s.force;
      bias.torque += s.torque;
      ++n;
    }
  }
  if (n < min_samples || n == 0) {
    throw Error(ErrorKind::WindowTooShort, "tare window holds " + std::to_string(n) +
                                               " samples, need " + std::to_string(min_samples));
  }
  bias.force /= static_cast<double>(n);
  bias.torque /= static_cast<double>(n);
  return bias;
}

std::vector<FtSample> subtract_bias(std::span<const FtSample> stream, const Bias& bias) {
  std::vector<FtSample> out(stream.begin(), stream.end());
  for (auto& s : out) {
    s.force -= bias.force;
    s.torque -= bias.torque;
  }
  return out;
}

namespace {

struct EventSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last contact sample
  bool released = false;
};

std::vector<EventSpan> contact_spans(std::span<const FtSample> stream, const ContactThresholds& c) {
  if (!(c.hysteresis > 0.0) || !(c.threshold > c.hysteresis)) {
    throw Error(ErrorKind::InvalidParameter, "contact detection needs threshold > hysteresis > 0");
  }
  if (c.smoothing < 1) throw Error(ErrorKind::InvalidParameter, "smoothing must be at least 1");
  const auto window = static_cast<std::size_t>(c.smoothing);
  std::vector<EventSpan> spans;
  bool in_contact = false;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    sum += stream[i].force;
    if (i >= window) sum -= stream[i - window].force;
    const double m = (sum / static_cast<double>(std::min(i + 1, window))).norm();
    if (!in_contact && m >= c.threshold) {
      spans.push_back({i, stream.size(), false});
      in_contact = true;
    } else if (in_contact && m < c.threshold - c.hysteresis) {
      spans.back().end = i;
      spans.back().released = true;
      in_contact = false;
    }
  }
  return spans;
}

std::optional<StiffnessEstimate> regress(std::span<const FtSample> tared,
                                         std::span<const double> closure, const EventSpan& span,
                                         std::vector<double>& xs, std::vector<double>& ys) {
  for (std::size_t i = span.begin; i < span.end; ++i) {
    if (tared[i].saturated) continue;
    xs.push_back(closure[i]);
    ys.push_back(tared[i].force.x());
  }
  if (xs.size() < 2) return std::nullopt;
  const auto fit = fit_line(xs, ys);
  if (fit.slope == 0.0) return std::nullopt;
  return StiffnessEstimate{-fit.slope, fit.r * fit.r, tared[span.begin].t, xs.size()};
}

struct Prepared {
  std::vector<FtSample> tared;
  std::vector<EventSpan> spans;
};

Prepared prepare(std::span<const FtSample> stream, std::span<const double> closure,
                 const StiffnessOptions& options) {
  if (closure.size() < stream.size()) {
    throw Error(ErrorKind::InvalidParameter, "closure series is shorter than the sample stream");
  }
  Prepared p;
  p.tared = subtract_bias(stream, tare(stream, options.tare_window));
  p.spans = contact_spans(p.tared, options.contact);
  if (p.spans.empty()) throw Error(ErrorKind::NoContact, "no contact detected in stream");
  return p;
}

}  // namespace

std::vector<ContactEvent> detect_contact(std::span<const FtSample> stream,
                                         const ContactThresholds& thresholds) {
  std::vector<ContactEvent> events;
  for (const auto& s : contact_spans(stream, thresholds)) {
    ContactEvent e{stream[s.begin].t, std::nullopt};
    if (s.released) e.release = stream[s.end].t;
    events.push_back(e);
  }
  return events;
}

std::vector<double> grip_closure(const GripProtocol& p, double rest_width, double rate_hz) {
  const double open = rest_width + p.open_margin;
  const double closed = rest_width - p.penetration;
  if (!(rate_hz > 0.0) || p.cycles < 1 || closed < 0.0 || p.open_margin < 0.0 ||
      p.penetration < 0.0) {
    throw Error(ErrorKind::InvalidParameter, "grip protocol is invalid");
  }
  const auto count = [&](double seconds) {
    if (!(seconds >= 0.0)) throw Error(ErrorKind::InvalidParameter, "negative protocol duration");
    return static_cast<std::size_t>(std::llround(seconds * rate_hz));
  };
  std::vector<double> out;
  const auto hold = [&](double value, double seconds) { out.insert(out.end(), count(seconds), value); };
  const auto ramp = [&](double from, double to, double seconds) {
    const std::size_t n = count(seconds);
    for (std::size_t j = 0; j < n; ++j) {
      out.push_back(from + (to - from) * static_cast<double>(j + 1) / static_cast<double>(n));
    }
  };
  for (int c = 0; c < p.cycles; ++c) {
    hold(open, p.open_hold);
    ramp(open, closed, p.close_time);
    hold(closed, p.closed_hold);
    ramp(closed, open, p.open_time);
  }
  hold(open, p.open_hold);
  return out;
}

std::vector<FtSample> simulate_grip_cycle(const SensorModel& model, const GripCycle& cycle,
                                          std::uint64_t seed) {
  model.validate();
  if (!(cycle.k > 0.0) || !(cycle.rest_width >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "grip cycle needs k > 0 and rest width >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, model.noise_std > 0.0 ? model.noise_std : 1.0);
  const auto draw = [&] { return model.noise_std > 0.0 ? noise(rng) : 0.0; };

  std::vector<FtSample> out;
  out.reserve(cycle.separation.size());
  for (std::size_t i = 0; i < cycle.separation.size(); ++i) {
    const double sep = cycle.separation[i];
    if (sep < 0.0) throw Error(ErrorKind::InvalidParameter, "separation must be nonnegative");
    FtSample s;
    s.t = static_cast<double>(i) / model.rate_hz;
    const double contact = cycle.k * std::max(0.0, cycle.rest_width - sep);
    s.force.x() = contact + draw() + model.drift_rate * s.t;
    s.force.y() = draw();
    s.force.z() = draw();
    s.torque.y() = s.force.x() * cycle.lever_arm;  // N * mm = mNm
    out.push_back(quantize(model, s));
  }
  return out;
}

StiffnessEstimate estimate_stiffness(std::span<const FtSample> stream,
                                     std::span<const double> closure,
                                     const StiffnessOptions& options) {
  const auto p = prepare(stream, closure, options);
  std::vector<double> xs, ys;
  std::optional<StiffnessEstimate> est;
  for (const auto& span : p.spans) {
    const auto e = regress(p.tared, closure, span, xs, ys);
    if (e) est = e;
  }
  if (!est) throw Error(ErrorKind::NoContact, "contact intervals too short to fit");
  est->contact_onset = p.tared[p.spans.front().begin].t;
  return *est;
}

std::vector<StiffnessEstimate> estimate_stiffness_per_event(std::span<const FtSample> stream,
                                                            std::span<const double> closure,
                                                            const StiffnessOptions& options) {
  const auto p = prepare(stream, closure, options);
  std::vector<StiffnessEstimate> out;
  for (const auto& span : p.spans) {
    std::vector<double> xs, ys;
    if (const auto e = regress(p.tared, closure, span, xs, ys)) out.push_back(*e);
  }
  if (out.empty()) throw Error(ErrorKind::NoContact, "contact intervals too short to fit");
  return out;
}

std::vector<Material> default_materials() {
  return {{"shore_00_20", 0.4}, {"shore_00_50", 0.8}, {"shore_A_20", 1.5},
          {"shore_A_60", 3.0},  {"shore_A_95", 5.0}};
}

std::vector<Material> read_materials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyFile, "materials file is empty");
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 2 || text::trim(header[0]) != "name" || text::trim(header[1]) != "k") {
    throw Error(ErrorKind::MissingColumn, "materials file header must start with name,k");
  }
  std::vector<Material> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < 2) {
      throw Error(ErrorKind::MissingColumn, "materials file line " + std::to_string(line_no));
    }
    const auto k = text::parse_double(fields[1]);
    if (!k) {
      throw Error(ErrorKind::NonNumericField,
                  "materials file line " + std::to_string(line_no) + ", column 'k'");
    }
    if (!(*k > 0.0)) {
      throw Error(ErrorKind::InvalidParameter,
                  "materials file line " + std::to_string(line_no) + ": k must be positive");
    }
    out.push_back({std::string(text::trim(fields[0])), *k});
  }
  if (out.empty()) throw Error(ErrorKind::EmptyFile, "materials file has no rows");
  return out;
}

std::vector<MaterialResult> run_material_study(const SensorModel& model,
                                               std::span<const Material> materials,
                                               const GripProtocol& protocol, double rest_width,
                                               std::uint64_t seed) {
  const auto closure = grip_closure(protocol, rest_width, model.rate_hz);
  std::vector<MaterialResult> out;
  for (std::size_t i = 0; i < materials.size(); ++i) {
    const GripCycle cycle{closure, materials[i].k, rest_width, 40.0};
    const auto stream = simulate_grip_cycle(model, cycle, seed + i);
    MaterialResult r;
    r.material = materials[i];
    const StiffnessOptions options;
    const auto tared = subtract_bias(stream, tare(stream, options.tare_window));
    r.events = detect_contact(tared, options.contact).size();
    for (const auto& s : tared) r.peak_force = std::max(r.peak_force, std::abs(s.force.x()));
    for (const auto& e : estimate_stiffness_per_event(stream, closure, options)) {
      r.k_hat.push_back(e.k_hat);
    }
    double sum = 0.0;
    for (double k : r.k_hat) sum += k;
    r.k_hat_mean = sum / static_cast<double>(r.k_hat.size());
    out.push_back(std::move(r));
  }
  return out;
}

int ordering_inversions(std::span<const MaterialResult> results) {
  std::vector<const MaterialResult*> sorted;
  for (const auto& r : results) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->material.k < b->material.k;
  });
  int inversions = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i]->k_hat_mean > sorted[i - 1]->k_hat_mean)) ++inversions;
  }
  return inversions;
}

void write_ft_samples_csv(std::ostream& out, std::span<const FtSample> stream) {
  out << "t,fx,fy,fz,tx,ty,tz,flags\n";
  for (const auto& s : stream) {
    out << text::format_double(s.t);
    for (int i = 0; i < 3; ++i) out << ',' << text::format_double(s.force[i]);
    for (int i = 0; i < 3; ++i) out << ',' << text::format_double(s.torque[i]);
    out << ',' << ((s.quantized ? 1 : 0) | (s.saturated ? 2 : 0)) << '\n';
  }
}

std::vector<FtSample> read_ft_samples_csv(std::istream& in) {
  static const std::array<std::string_view, 8> columns{"t", "fx", "fy", "fz", "tx", "ty", "tz", "flags"};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyFile, "sample stream is empty");
  const auto header = text::split(text::trim(line), ',');
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i >= header.size() || text::trim(header[i]) != columns[i]) {
      throw Error(ErrorKind::MissingColumn,
                  "sample stream: expected column '" + std::string(columns[i]) + "'");
    }
  }
  std::vector<FtSample> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < columns.size()) {
      throw Error(ErrorKind::MissingColumn, "sample stream line " + std::to_string(line_no));
    }
    double v[8];
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto parsed = text::parse_double(fields[k]);
      if (!parsed) {
        throw Error(ErrorKind::NonNumericField, "sample stream line " + std::to_string(line_no) +
                                                    ", column '" + std::string(columns[k]) + "'");
      }
      v[k] = *parsed;
    }
    FtSample s;
    s.t = v[0];
    s.force = {v[1], v[2], v[3]};
    s.torque = {v[4], v[5], v[6]};
    const int flags = static_cast<int>(v[7]);
    s.quantized = (flags & 1) != 0;
    s.saturated = (flags & 2) != 0;
    out.push_back(s);
  }
  return out;
}

void write_closure_csv(std::ostream& out, std::span<const double> closure, double rate_hz) {
  out << "t,separation\n";
  for (std::size_t i = 0; i < closure.size(); ++i) {
    out << text::format_double(static_cast<double>(i) / rate_hz) << ','
        << text::format_double(closure[i]) << '\n';
  }
}

std::vector<double> read_closure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyFile, "closure file is empty");
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 2 || text::trim(header[0]) != "t" || text::trim(header[1]) != "separation") {
    throw Error(ErrorKind::MissingColumn, "closure file header must be t,separation");
  }
  std::vector<double> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    const auto v = fields.size() >= 2 ? text::parse_double(fields[1]) : std::nullopt;
    if (!v) {
      throw Error(ErrorKind::NonNumericField,
                  "closure file line " + std::to_string(line_no) + ", column 'separation'");
    }
    out.push_back(*v);
  }
  return out;
}

}  // namespace chopstick
