#pragma once

#include "rmdp/config.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"
#include "rmdp/trace.hpp"

#include <optional>
#include <span>

namespace rmdp {

/// dJ_nu(pi, lambda) / dpi(a|s), or dJ / dtheta(s,a) for softmax parameters.
struct GradientField {
    StateActionValues partials;
    Distribution start_dist;

    /// Euclidean norm of the gradient projected onto the simplex tangent space (rows summing to 0).
    double tangent_norm() const;
};

/// Softmax logits; pi_theta(a|s) = exp(theta(s,a)) / sum_a' exp(theta(s,a')).
struct SoftmaxParams {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> theta;

    static SoftmaxParams zeros(std::size_t num_states, std::size_t num_actions);
    /// theta = log pi; requires a strictly positive policy.
    static SoftmaxParams from_policy(const Policy& policy);
    Policy policy() const;
};

/// L_lambda = unregularized + lambda * per_lambda.
struct SmoothnessEstimate {
    double l_lambda = 0.0;
    double unregularized = 0.0;  ///< 4 gamma |A| R / (1 - gamma)^3
    double per_lambda = 0.0;     ///< (4 gamma |A| C + 2 (1-gamma) sqrt|A| C1 + (1-gamma)^2 C2) / (1-gamma)^3
};

/// (1 / (1 - gamma)) d_{pi,nu}(s) (Q_lambda(s,a) - lambda grad omega(pi(.|s))_a).
GradientField exact_gradient(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                             std::span<const double> nu, const NumericConfig& cfg = default_config());

/// Per-state Euclidean projection of an S x A table onto {p >= lower, sum p = 1}.
Policy simplex_project(std::span<const double> point, std::size_t num_states, std::size_t num_actions,
                       double lower = 0.0, Exec exec = default_config().exec);

SmoothnessEstimate smoothness_constant(const TabularMdp& mdp, const Regularizer& reg, double lambda);

/// One projected ascent step pi' = Proj_floor(pi + eta grad J_nu).
struct PgaStep {
    Policy policy;
    double objective_before = 0.0;
    double objective_after = 0.0;
    double grad_norm = 0.0;
    double step_sq = 0.0;  ///< ||pi' - pi||_F^2
};
PgaStep pga_step(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& policy,
                 std::span<const double> nu, double eta, const NumericConfig& cfg = default_config());

/// Projected step from an externally supplied gradient (used with sampled gradients).
Policy pga_step_with(const Policy& policy, const GradientField& grad, double eta, double floor,
                     Exec exec = default_config().exec);

struct PgaResult {
    Policy policy;            ///< pi_T
    Policy best_policy;       ///< argmax_t J_nu(pi_t)
    std::size_t best_index = 0;
    double step = 0.0;
    double smoothness = 0.0;
    SolverTrace trace;
};

/**
 * Projected gradient ascent on the delta-floored simplex (delta = reg.floor()).
 * step = nullopt selects 1 / L_lambda. When optimal_objective (J_nu(pi*_lambda))
 * is given, rows carry the objective gap. improvement_slack is
 * J_{t+1} - J_t - (2 - eta L) / (2 eta) ||pi_{t+1} - pi_t||^2.
 */
PgaResult pga(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& init,
              std::span<const double> nu, std::optional<double> step, std::size_t iterations,
              std::optional<double> optimal_objective = std::nullopt, const NumericConfig& cfg = default_config());

/// dJ / dtheta through the softmax Jacobian. Entropy gradients use log pi_theta directly.
GradientField softmax_gradient(const TabularMdp& mdp, const Regularizer& reg, double lambda,
                               const SoftmaxParams& params, std::span<const double> nu,
                               const NumericConfig& cfg = default_config());

/// (1 - gamma)^3 / (8 + lambda (4 + 8 log|A|))
double softmax_auto_step(double gamma, double lambda, std::size_t num_actions);

struct SoftmaxResult {
    SoftmaxParams params;
    double step = 0.0;
    SolverTrace trace;  ///< min_prob holds the running c_lambda estimate
};

/// Softmax policy gradient; entropy-family regularizers only.
SoftmaxResult softmax_pg(const TabularMdp& mdp, const Regularizer& reg, double lambda, const SoftmaxParams& init,
                         std::span<const double> nu, std::optional<double> step, std::size_t iterations,
                         std::optional<double> optimal_objective = std::nullopt,
                         const NumericConfig& cfg = default_config());

/// pi'(.|s) proportional to pi^{1 - lambda eta}(.|s) exp(eta Q_lambda^pi(s,.)).
Policy mdpo_update(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& policy, double eta,
                   const NumericConfig& cfg = default_config());

} // namespace rmdp
