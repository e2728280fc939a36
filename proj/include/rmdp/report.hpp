#pragma once

#include "rmdp/experiments.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace rmdp {

/// Shortest round-trip decimal form; "nan" / "inf" for non-finite values.
std::string format_double(double x);

void write_run_csv(std::ostream& os, const RunRecord& run);
void write_summary_csv(std::ostream& os, const ComparisonResult& result);
void write_epochs_csv(std::ostream& os, const ReductionReport& report);
void write_trace_csv(std::ostream& os, const SolverTrace& trace);
void write_duality_csv(std::ostream& os, const DualityReport& report);

nlohmann::json run_to_json(const RunRecord& run);
nlohmann::json comparison_to_json(const ComparisonResult& result);
nlohmann::json report_to_json(const ReductionReport& report);
nlohmann::json trace_to_json(const SolverTrace& trace);
nlohmann::json duality_to_json(const DualityReport& report);

/// Writes runs, summary and timing files into dir; format is "csv" or "json".
void write_comparison(const std::string& dir, const ComparisonResult& result, const std::string& format);

} // namespace rmdp
