#pragma once

#include <cstddef>

namespace rmdp {

/// Where the data-parallel kernels run.
enum class Exec { serial, parallel };

/// Every numeric tolerance the library relies on, in one place.
struct NumericConfig {
    double transition_row_tol = 1e-12;  ///< |sum_s' P(s'|s,a) - 1|
    double distribution_tol = 1e-12;    ///< mu, nu, start distributions
    double policy_row_tol = 1e-10;      ///< |sum_a pi(a|s) - 1|
    double simplex_input_tol = 1e-9;    ///< accepted slack for regularizer arguments
    double eval_residual = 1e-12;       ///< iterative evaluation stop (large |S|)
    std::size_t direct_solve_limit = 2000;
    std::size_t max_eval_iterations = 1000000;
    double oracle_tolerance = 1e-10;    ///< sup-norm distance to V*_lambda
    double interior_floor = 1e-6;       ///< delta of the floored simplex
    double greedy_inner_tol = 1e-12;    ///< inner projected-gradient greedy
    std::size_t greedy_inner_max_iterations = 200000;
    Exec exec = Exec::parallel;
};

/// Process-wide defaults; functions without an explicit config use these.
inline const NumericConfig& default_config() {
    static const NumericConfig cfg{};
    return cfg;
}

} // namespace rmdp
