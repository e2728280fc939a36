#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace rmdp {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One solver iteration. Fields a solver does not measure stay NaN / 0.
struct TraceRow {
    std::size_t iteration = 0;
    double lambda = 0.0;
    double objective = kNaN;       ///< J under the solver's start distribution
    double gap = kNaN;             ///< measured gap against the oracle, when supplied
    double grad_norm = kNaN;
    double step_sq = kNaN;         ///< ||pi_{t+1} - pi_t||^2
    double improvement_slack = kNaN;
    double min_prob = kNaN;
    std::size_t samples = 0;       ///< cumulative trajectories
};

enum class SolverStatus { converged, budget, certified, completed };

const char* to_string(SolverStatus status);

struct SolverTrace {
    std::vector<TraceRow> rows;
    SolverStatus status = SolverStatus::completed;
    std::vector<std::string> warnings;

    std::size_t iterations() const { return rows.empty() ? 0 : rows.back().iteration; }
};

} // namespace rmdp
