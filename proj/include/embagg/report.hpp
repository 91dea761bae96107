#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "embagg/analysis.hpp"
#include "embagg/evaluation.hpp"

namespace embagg {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Everything needed to reproduce a report. No timestamps, host names, or
/// worker counts: identical inputs give identical bytes.
struct Provenance {
  std::string command;
  std::string dataset_name;
  std::string input_hash;
  std::string toolkit_version = kToolkitVersion;
  std::vector<std::pair<std::string, std::string>> parameters;

  bool operator==(const Provenance&) const = default;
};

struct CurveReport {
  std::string kind;  // "plateau" or "rolling"
  std::vector<CurveSeries> per_person;
  CurveSeries average;
  std::vector<std::size_t> average_counts;
  std::vector<SkippedPerson> skipped;
};

struct GreedyReport {
  std::vector<PersonTrace> per_person;
  std::vector<double> average_per_step;
  std::vector<std::size_t> persons_per_step;
  double average_all_images = 0.0;
  std::vector<SkippedPerson> skipped;
};

struct ReportDocument {
  Provenance provenance;
  std::variant<EvaluationReport, CurveReport, GreedyReport> payload;
};

enum class ReportFormat { Table, Delimited, Json };

std::optional<ReportFormat> parse_report_format(std::string_view name);

/// "0.410"
std::string format_distance(double d);
/// "1.8x"; "n/a" for an absent factor.
std::string format_factor(std::optional<double> f);
/// "0.410 (1.8x)"
std::string format_cell(double distance, std::optional<double> factor);

/// Renders the document. Table is one row per strategy with oracle
/// rows marked; delimited and JSON carry full precision.
std::string emit_report(const ReportDocument& doc, ReportFormat format);

/// Inverse of emit_report(..., Json). Throws ManifestParseError.
ReportDocument parse_report_json(std::string_view text);

CurveReport to_report(std::string kind, CurveExperiment experiment);
GreedyReport to_report(GreedyExperiment experiment);

}  // namespace embagg
