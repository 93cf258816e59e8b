#pragma once

// Versioned YAML reports for sweeps and comparisons.
//
// The report file holds only deterministic content, so repeated runs with the
// same seed produce identical bytes. Wall-clock timings go to a tab-separated
// sidecar `<report>.timing.tsv`, merged back by read_report when present.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "bayesev/harness.hpp"

namespace bayesev {

inline constexpr int kReportSchema = 1;

class ReportFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for a well-formed report written under a different schema version.
class ReportVersionError : public ReportFormatError {
public:
    using ReportFormatError::ReportFormatError;
};

using Report = std::variant<SweepReport, ComparisonReport>;

std::string serialize_report(const SweepReport& report);
std::string serialize_report(const ComparisonReport& report);

std::filesystem::path timing_path(const std::filesystem::path& report_path);

void write_report(const SweepReport& report, const std::filesystem::path& path);
void write_report(const ComparisonReport& report, const std::filesystem::path& path);

Report read_report(const std::filesystem::path& path);
SweepReport read_sweep_report(const std::filesystem::path& path);
ComparisonReport read_comparison_report(const std::filesystem::path& path);

/// `# model_id<TAB>score` then one line per successful record.
void write_plot_data(const SweepReport& report, const std::filesystem::path& path);

}  // namespace bayesev
