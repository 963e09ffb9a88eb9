#include "chopstick/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "chopstick/text.hpp"

namespace chopstick {

namespace {

const std::array<std::string_view, 6> kColumns{"cx", "cy", "cz", "ox", "oy", "oz"};

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

AxisStats axis_stats(std::span<const double> v) {
  const double m = mean(v);
  return {m, sample_std(v, m)};
}

}  // namespace

std::vector<PosePairRecord> ingest_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty()) {
    throw Error(ErrorKind::EmptyFile, "pose file is empty");
  }
  const auto header = text::split(text::trim(line), ',');
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i >= header.size() || text::trim(header[i]) != kColumns[i]) {
      throw Error(ErrorKind::MissingColumn,
                  "pose file header: expected column " + std::to_string(i + 1) + " to be '" +
                      std::string(kColumns[i]) + "'");
    }
  }
  const bool has_tag = header.size() > kColumns.size() && text::trim(header[6]) == "tag";

  std::vector<PosePairRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < kColumns.size()) {
      throw Error(ErrorKind::MissingColumn, "pose file line " + std::to_string(line_no) +
                                                ": expected 6 numeric fields, found " +
                                                std::to_string(fields.size()));
    }
    double v[6];
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
      const auto parsed = text::parse_double(fields[k]);
      if (!parsed) {
        throw Error(ErrorKind::NonNumericField,
                    "pose file line " + std::to_string(line_no) + ", column '" +
                        std::string(kColumns[k]) + "': not a number");
      }
      v[k] = *parsed;
    }
    PosePairRecord rec{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, std::nullopt};
    if (has_tag && fields.size() > 6) rec.tag = std::string(text::trim(fields[6]));
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw Error(ErrorKind::EmptyFile, "pose file has a header but no rows");
  return out;
}

std::vector<PosePairRecord> ingest_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return ingest_csv(in);
}

void write_pose_pairs_csv(std::ostream& out, std::span<const PosePair> pairs) {
  out << "cx,cy,cz,ox,oy,oz\n";
  for (const auto& p : pairs) {
    out << text::format_double(p.commanded.x) << ',' << text::format_double(p.commanded.y) << ','
        << text::format_double(p.commanded.z) << ',' << text::format_double(p.observed.x) << ','
        << text::format_double(p.observed.y) << ',' << text::format_double(p.observed.z) << '\n';
  }
}

std::vector<PosePairRecord> to_records(std::span<const PosePair> pairs) {
  std::vector<PosePairRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.commanded, p.observed, std::nullopt});
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.intercept = my;
  if (sxx > 0.0) {
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
  }
  if (sxx > 0.0 && syy > 0.0) fit.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return fit;
}

ErrorReport error_report(std::span<const PosePairRecord> records) {
  if (records.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "error report needs at least 2 records");
  }
  const std::size_t n = records.size();
  std::vector<double> l2(n), ex(n), ey(n), ez(n), radial(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = records[i].commanded;
    const auto& o = records[i].observed;
    l2[i] = (c.vec() - o.vec()).norm();
    ex[i] = std::abs(c.x - o.x);
    ey[i] = std::abs(c.y - o.y);
    ez[i] = std::abs(c.z - o.z);
    radial[i] = c.radial();
  }
  ErrorReport rep;
  rep.n = n;
  const auto l2s = axis_stats(l2);
  rep.mean_l2 = l2s.mean;
  rep.std_l2 = l2s.std;
  rep.x = axis_stats(ex);
  rep.y = axis_stats(ey);
  rep.z = axis_stats(ez);
  const auto fit = fit_line(radial, l2);
  rep.slope = fit.slope;
  rep.r = fit.r;
  return rep;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

std::string render_report(const ErrorReport& rep, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Json: {
      const auto axis = [](const AxisStats& a) {
        return nlohmann::ordered_json{{"mean", a.mean}, {"std", a.std}};
      };
      nlohmann::ordered_json j{{"mean_l2", rep.mean_l2}, {"std_l2", rep.std_l2},
                               {"x", axis(rep.x)},       {"y", axis(rep.y)},
                               {"z", axis(rep.z)},       {"slope", rep.slope},
                               {"r", rep.r},             {"n", rep.n}};
      out << j.dump(2) << '\n';
      break;
    }
    case ReportFormat::Csv: {
      out << "metric,mean,std\n";
      out << "l2," << text::format_double(rep.mean_l2) << ',' << text::format_double(rep.std_l2) << '\n';
      out << "x," << text::format_double(rep.x.mean) << ',' << text::format_double(rep.x.std) << '\n';
      out << "y," << text::format_double(rep.y.mean) << ',' << text::format_double(rep.y.std) << '\n';
      out << "z," << text::format_double(rep.z.mean) << ',' << text::format_double(rep.z.std) << '\n';
      out << "slope," << text::format_double(rep.slope) << ",\n";
      out << "r," << text::format_double(rep.r) << ",\n";
      out << "n," << rep.n << ",\n";
      break;
    }
    case ReportFormat::Text: {
      const auto cell = [](double m, double s) {
        return text::format_fixed(m, 2) + " +- " + text::format_fixed(s, 2);
      };
      const auto row = [&](const char* label, double l2m, double l2s, const AxisStats& x,
                           const AxisStats& y, const AxisStats& z) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-22s %-14s %-14s %-14s %-14s\n", label,
                      cell(l2m, l2s).c_str(), cell(x.mean, x.std).c_str(),
                      cell(y.mean, y.std).c_str(), cell(z.mean, z.std).c_str());
        out << buf;
      };
      char head[256];
      std::snprintf(head, sizeof head, "%-22s %-14s %-14s %-14s %-14s\n", "", "L2 [mm]", "|x| [mm]",
                    "|y| [mm]", "|z| [mm]");
      out << head;
      row("computed", rep.mean_l2, rep.std_l2, rep.x, rep.y, rep.z);
      const ReferenceRow ref;
      row("reference (hardware)", ref.mean_l2, ref.std_l2, ref.x, ref.y, ref.z);
      out << "n = " << rep.n << '\n';
      out << "radial trend: slope " << text::format_fixed(rep.slope, 4) << " mm/mm, r "
          << text::format_fixed(rep.r, 4) << '\n';
      out << "axis columns are mean absolute error; the reference row is a published\n"
             "hardware measurement and is not expected to match simulated data\n";
      break;
    }
  }
  return out.str();
}

}  // namespace chopstick
