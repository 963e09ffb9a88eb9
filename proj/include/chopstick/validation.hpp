#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chopstick/mechanism.hpp"
#include "chopstick/workspace.hpp"

namespace chopstick {

struct PosePairRecord {
  TipPose commanded;
  TipPose observed;
  std::optional<std::string> tag;
};

struct AxisStats {
  double mean = 0.0;  ///< mean absolute error, mm
  double std = 0.0;   ///< sample standard deviation, mm
};

struct ErrorReport {
  double mean_l2 = 0.0;
  double std_l2 = 0.0;
  AxisStats x, y, z;
  double slope = 0.0;  ///< least-squares L2 error per mm of commanded radial distance
  double r = 0.0;      ///< Pearson correlation of the same fit
  std::size_t n = 0;
};

/// Published hardware figures, printed next to computed results for comparison.
struct ReferenceRow {
  double mean_l2 = 2.93, std_l2 = 1.30;
  AxisStats x{1.88, 1.10}, y{1.79, 1.15}, z{0.79, 0.61};
};

/// Header `cx,cy,cz,ox,oy,oz[,tag]`, columns in that order, mm.
std::vector<PosePairRecord> ingest_csv(std::istream& in);
std::vector<PosePairRecord> ingest_csv_file(const std::filesystem::path& path);

void write_pose_pairs_csv(std::ostream& out, std::span<const PosePair> pairs);
std::vector<PosePairRecord> to_records(std::span<const PosePair> pairs);

/// Throws Error(InsufficientData) for fewer than two records.
ErrorReport error_report(std::span<const PosePairRecord> records);

enum class ReportFormat { Text, Json, Csv };
std::optional<ReportFormat> parse_report_format(std::string_view name);

std::string render_report(const ErrorReport& report, ReportFormat format);

/// Pearson correlation and least-squares slope of y on x; both 0 when either side is constant.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace chopstick
