#include "rmdp/report.hpp"

#include "rmdp/errors.hpp"
#include "rmdp/io.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace rmdp {

using nlohmann::json;

const char* to_string(SolverStatus status) {
    switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::budget: return "budget";
    case SolverStatus::certified: return "certified";
    case SolverStatus::completed: return "completed";
    }
    return "unknown";
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::string count(std::size_t n) { return n == npos ? "" : std::to_string(n); }

json number(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

json count_json(std::size_t n) {
    if (n == npos) return nullptr;
    return n;
}

std::ofstream open_file(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

} // namespace

void write_run_csv(std::ostream& os, const RunRecord& run) {
    os << "epoch,iteration,lambda,j_nu,j_mu,gap,grad_norm,samples\n";
    for (const RunRow& r : run.rows)
        os << r.epoch << ',' << r.iteration << ',' << format_double(r.lambda) << ',' << format_double(r.j_nu) << ','
           << format_double(r.j_mu) << ',' << format_double(r.gap) << ',' << format_double(r.grad_norm) << ','
           << r.samples << '\n';
}

void write_summary_csv(std::ostream& os, const ComparisonResult& result) {
    os << "method,member,epsilon,reached,iterations,samples\n";
    for (const SummaryRow& r : result.summary)
        os << r.method << ',' << r.member << ',' << format_double(r.epsilon) << ',' << (r.reached ? 1 : 0) << ','
           << count(r.iterations) << ',' << (r.reached ? std::to_string(r.samples) : "") << '\n';
}

void write_epochs_csv(std::ostream& os, const ReductionReport& report) {
    os << "epoch,lambda,gap_before,gap_after,target,iterations,samples,status\n";
    for (const EpochRecord& e : report.epochs)
        os << e.epoch << ',' << format_double(e.lambda) << ',' << format_double(e.gap_before) << ','
           << format_double(e.gap_after) << ',' << format_double(e.target) << ',' << e.iterations << ','
           << e.samples << ',' << to_string(e.status) << '\n';
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
    os << "iteration,lambda,objective,gap,grad_norm,step_sq,improvement_slack,min_prob,samples\n";
    for (const TraceRow& r : trace.rows)
        os << r.iteration << ',' << format_double(r.lambda) << ',' << format_double(r.objective) << ','
           << format_double(r.gap) << ',' << format_double(r.grad_norm) << ',' << format_double(r.step_sq) << ','
           << format_double(r.improvement_slack) << ',' << format_double(r.min_prob) << ',' << r.samples << '\n';
}

void write_duality_csv(std::ostream& os, const DualityReport& report) {
    os << "lambda,value\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i)
        os << format_double(report.grid[i]) << ',' << format_double(report.values[i]) << '\n';
}

json run_to_json(const RunRecord& run) {
    json rows = json::array();
    for (const RunRow& r : run.rows)
        rows.push_back({{"epoch", r.epoch},
                        {"iteration", r.iteration},
                        {"lambda", number(r.lambda)},
                        {"j_nu", number(r.j_nu)},
                        {"j_mu", number(r.j_mu)},
                        {"gap", number(r.gap)},
                        {"grad_norm", number(r.grad_norm)},
                        {"samples", r.samples}});
    json hits = json::array();
    for (std::size_t h : run.first_hit) hits.push_back(count_json(h));
    json out{{"name", run.name}, {"member", run.member}, {"lambda", number(run.lambda)}, {"rows", rows},
             {"first_hit", hits}};
    if (!run.snapshots.empty()) {
        json snaps = json::array();
        for (const Policy& p : run.snapshots) snaps.push_back(policy_to_json(p));
        out["snapshots"] = snaps;
    }
    return out;
}

json comparison_to_json(const ComparisonResult& result) {
    json summary = json::array();
    for (const SummaryRow& r : result.summary)
        summary.push_back({{"method", r.method},
                           {"member", r.member},
                           {"epsilon", r.epsilon},
                           {"reached", r.reached},
                           {"iterations", count_json(r.iterations)},
                           {"samples", r.reached ? json(r.samples) : json(nullptr)}});
    json slopes = json::array();
    for (const SlopeFit& f : result.slopes)
        slopes.push_back({{"method", f.method}, {"member", f.member}, {"slope", number(f.slope)}, {"points", f.points}});
    json runs = json::array();
    for (const RunRecord& r : result.runs) runs.push_back(run_to_json(r));
    return {{"summary", summary},
            {"slopes", slopes},
            {"median_slope", {{"fixed", number(result.median_slope_fixed)},
                              {"adapt_reduce", number(result.median_slope_adapt)},
                              {"unregularized", number(result.median_slope_baseline)}}},
            {"runs", runs}};
}

json trace_to_json(const SolverTrace& trace) {
    json rows = json::array();
    for (const TraceRow& r : trace.rows)
        rows.push_back({{"iteration", r.iteration},
                        {"lambda", number(r.lambda)},
                        {"objective", number(r.objective)},
                        {"gap", number(r.gap)},
                        {"grad_norm", number(r.grad_norm)},
                        {"step_sq", number(r.step_sq)},
                        {"improvement_slack", number(r.improvement_slack)},
                        {"min_prob", number(r.min_prob)},
                        {"samples", r.samples}});
    return {{"status", to_string(trace.status)}, {"warnings", trace.warnings}, {"rows", rows}};
}

json report_to_json(const ReductionReport& report) {
    json epochs = json::array();
    for (const EpochRecord& e : report.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"lambda", e.lambda},
                          {"gap_before", number(e.gap_before)},
                          {"gap_after", number(e.gap_after)},
                          {"target", number(e.target)},
                          {"iterations", e.iterations},
                          {"samples", e.samples},
                          {"status", to_string(e.status)}});
    return {{"epochs", epochs},
            {"lambda0", report.lambda0},
            {"c_phi", report.c_phi},
            {"d0", number(report.d0)},
            {"final_gap", number(report.final_gap)},
            {"epsilon_hat", report.epsilon_hat},
            {"epsilon_hat_measured", report.epsilon_hat_measured},
            {"bound", number(report.bound)},
            {"total_iterations", report.total_iterations},
            {"total_samples", report.total_samples},
            {"trace", trace_to_json(report.trace)}};
}

json duality_to_json(const DualityReport& report) {
    return {{"grid", report.grid},
            {"values", report.values},
            {"min_value", report.min_value},
            {"argmin_lambda", report.argmin_lambda},
            {"unregularized", report.unregularized},
            {"worst_monotone_slack", report.worst_monotone_slack},
            {"monotone", report.monotone},
            {"passed", report.passed}};
}

void write_comparison(const std::string& dir, const ComparisonResult& result, const std::string& format) {
    namespace fs = std::filesystem;
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());

    if (format == "json") {
        open_file(root / "results.json") << comparison_to_json(result).dump(2) << '\n';
    } else {
        for (const RunRecord& r : result.runs) {
            auto os = open_file(root / ("run_" + std::to_string(r.member) + "_" + r.name + ".csv"));
            write_run_csv(os, r);
        }
        auto summary = open_file(root / "summary.csv");
        write_summary_csv(summary, result);
        auto slopes = open_file(root / "slopes.csv");
        slopes << "method,member,slope,points\n";
        for (const SlopeFit& f : result.slopes)
            slopes << f.method << ',' << f.member << ',' << format_double(f.slope) << ',' << f.points << '\n';
        if (std::any_of(result.runs.begin(), result.runs.end(), [](const RunRecord& r) { return !r.snapshots.empty(); })) {
            json snaps = json::array();
            for (const RunRecord& r : result.runs) {
                json ps = json::array();
                for (const Policy& p : r.snapshots) ps.push_back(policy_to_json(p));
                snaps.push_back({{"name", r.name}, {"member", r.member}, {"snapshots", ps}});
            }
            open_file(root / "snapshots.json") << snaps.dump() << '\n';
        }
    }
    auto timing = open_file(root / "timing.csv");
    timing << "member,name,wall_seconds\n";
    for (const RunRecord& r : result.runs)
        timing << r.member << ',' << r.name << ',' << format_double(r.wall_seconds) << '\n';
}

} // namespace rmdp
