#pragma once

#include "rmdp/config.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"
#include "rmdp/trace.hpp"

#include <cstddef>
#include <optional>

namespace rmdp {

struct BellmanConfig {
    std::optional<std::size_t> eval_steps;  ///< m; nullopt means exact evaluation (m = infinity)
    double greedy_tolerance = 0.0;          ///< epsilon_0
    std::size_t max_iterations = 1000;
    double convergence_tolerance = 1e-10;   ///< stop when ||V_{k+1} - V_k||_inf falls below
    bool adversarial = false;               ///< add +epsilon_0 to every value update

    void validate() const;
    friend bool operator==(const BellmanConfig&, const BellmanConfig&) = default;
};

/// [T_lambda^pi V](s) = E_{a~pi}(r + gamma E V) - lambda Omega(pi(.|s)).
StateValues apply_bellman(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg,
                          double lambda, const StateValues& v, const NumericConfig& cfg = default_config());

struct GreedyResult {
    Policy policy;
    StateValues values;  ///< max_pi T_lambda^pi V, state-wise
};

/// Per state argmax_p <p, q(s,.)> - lambda omega(p), q = r + gamma P V.
GreedyResult regularized_greedy(const TabularMdp& mdp, const Regularizer& reg, double lambda,
                                const StateValues& v, double tolerance = 0.0,
                                const NumericConfig& cfg = default_config());

struct OracleResult {
    Policy policy;          ///< pi*_lambda
    StateValues values;     ///< V*_lambda
    std::size_t iterations = 0;
};

/**
 * Iterates the regularized optimality operator max_pi T_lambda^pi from V = 0
 * until ||V_{k+1} - V_k|| <= tolerance (1 - gamma) / gamma, which puts V
 * within tolerance of V*_lambda in sup norm.
 */
OracleResult soft_optimal_oracle(const TabularMdp& mdp, const Regularizer& reg, double lambda,
                                 double tolerance = default_config().oracle_tolerance,
                                 const NumericConfig& cfg = default_config());

/// One RMPI iteration from V_k: greedy step then m evaluation sweeps.
struct RmpiStep {
    Policy policy;
    StateValues values;
};
RmpiStep rmpi_step(const TabularMdp& mdp, const Regularizer& reg, double lambda, const StateValues& v,
                   const BellmanConfig& bcfg, const NumericConfig& cfg = default_config());

struct RmpiResult {
    Policy policy;
    StateValues values;
    SolverTrace trace;
};

/**
 * Regularized modified policy iteration started from init (V_0 = V_lambda^init).
 * When reference values V*_lambda are given, every trace row records the
 * sup-norm gap ||V*_lambda - V_lambda^{alpha_k}||.
 */
RmpiResult rmpi(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& init,
                const BellmanConfig& bcfg, const std::optional<StateValues>& reference = std::nullopt,
                const NumericConfig& cfg = default_config());

struct AlternatingResult {
    Policy policy;
    SolverTrace trace;
    std::vector<double> lambdas;  ///< lambda_t for t = 0..T
    bool gamma_precondition = true;  ///< 1/2 <= gamma^2
};

/**
 * RMPI with alternating reduction: one evaluation sweep, halve lambda, one
 * greedy step, T times. With unregularized V* supplied, trace rows carry
 * ||V* - V^{pi_t}||.
 */
AlternatingResult rmpi_alternating(const TabularMdp& mdp, const Regularizer& reg, double lambda0,
                                   const StateValues& init_v, const Policy& init_policy, std::size_t epochs,
                                   double eps0, bool adversarial = false,
                                   const std::optional<StateValues>& optimal_values = std::nullopt,
                                   const NumericConfig& cfg = default_config());

/// 4 gamma^T lambda0 C / (1-gamma)^2 + 2 eps0 / (1-gamma)^2 + 2 gamma^{T+1} ||V* - V_0|| / (1-gamma)
double alternating_bound(double gamma, double lambda0, double c_phi, double eps0, std::size_t epochs,
                         double initial_distance);

} // namespace rmdp
