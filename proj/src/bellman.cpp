#include "rmdp/bellman.hpp"

#include "rmdp/errors.hpp"
#include "rmdp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace rmdp {

void BellmanConfig::validate() const {
    if (eval_steps && *eval_steps == 0)
        throw ArgumentError("bellman: eval_steps must be positive");
    if (!(greedy_tolerance >= 0.0))
        throw ArgumentError("bellman: greedy_tolerance must be nonnegative");
    if (max_iterations == 0)
        throw ArgumentError("bellman: max_iterations must be positive");
    if (!(convergence_tolerance >= 0.0))
        throw ArgumentError("bellman: convergence_tolerance must be nonnegative");
}

namespace {

void check_values(const TabularMdp& mdp, const StateValues& v) {
    if (v.size() != mdp.num_states())
        throw ShapeError("value vector length does not match mdp");
}

double inner_tolerance(const Regularizer& reg, double lambda, double eps0, const NumericConfig& cfg) {
    if (eps0 <= 0.0) return cfg.greedy_inner_tol;
    // suboptimality <= ||gradient mapping||^2 / (2 * strong convexity modulus)
    const double mu = lambda * std::max(reg.strong_convexity().modulus, 1e-300);
    return std::max(cfg.greedy_inner_tol, std::sqrt(2.0 * mu * eps0));
}

} // namespace

StateValues apply_bellman(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                          const StateValues& v, const NumericConfig& cfg) {
    check_values(mdp, v);
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw ShapeError("apply_bellman: policy shape does not match mdp");
    const auto omega = policy_regularizer(reg, policy);
    StateValues out{std::vector<double>(mdp.num_states())};
    kernels::policy_backup(cfg.exec, mdp, policy, omega, lambda, v.values, out.values);
    return out;
}

GreedyResult regularized_greedy(const TabularMdp& mdp, const Regularizer& reg, double lambda, const StateValues& v,
                                double tolerance, const NumericConfig& cfg) {
    if (lambda < 0.0)
        throw ArgumentError("regularized_greedy: negative lambda");
    if (tolerance < 0.0)
        throw ArgumentError("regularized_greedy: negative tolerance");
    check_values(mdp, v);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const StateActionValues q = backup_q(mdp, v.values, cfg.exec);
    std::vector<double> probs(S * A);
    StateValues values{std::vector<double>(S)};
    kernels::greedy_rows(cfg.exec, reg, q.values, A, lambda, probs, values.values,
                         inner_tolerance(reg, lambda, tolerance, cfg), cfg.greedy_inner_max_iterations);
    return {Policy(S, A, std::move(probs)), std::move(values)};
}

OracleResult soft_optimal_oracle(const TabularMdp& mdp, const Regularizer& reg, double lambda, double tolerance,
                                 const NumericConfig& cfg) {
    if (lambda < 0.0)
        throw ArgumentError("soft_optimal_oracle: negative lambda");
    if (!(tolerance > 0.0))
        throw ArgumentError("soft_optimal_oracle: tolerance must be positive");
    const double g = mdp.discount();
    const double stop = g > 0.0 ? tolerance * (1.0 - g) / g : std::numeric_limits<double>::infinity();
    StateValues v{std::vector<double>(mdp.num_states(), 0.0)};
    std::size_t it = 0;
    for (;;) {
        GreedyResult next = regularized_greedy(mdp, reg, lambda, v, 0.0, cfg);
        const double diff = sup_distance(next.values.values, v.values);
        v = std::move(next.values);
        ++it;
        if (diff <= stop || it >= 100000000) break;
    }
    GreedyResult final = regularized_greedy(mdp, reg, lambda, v, 0.0, cfg);
    return {std::move(final.policy), std::move(v), it};
}

RmpiStep rmpi_step(const TabularMdp& mdp, const Regularizer& reg, double lambda, const StateValues& v,
                   const BellmanConfig& bcfg, const NumericConfig& cfg) {
    GreedyResult g = regularized_greedy(mdp, reg, lambda, v, bcfg.greedy_tolerance, cfg);
    StateValues next;
    if (!bcfg.eval_steps) {
        next = regularized_value(mdp, g.policy, reg, lambda, cfg);
    } else {
        next = std::move(g.values);
        for (std::size_t i = 1; i < *bcfg.eval_steps; ++i) next = apply_bellman(mdp, g.policy, reg, lambda, next, cfg);
    }
    if (bcfg.adversarial)
        for (double& x : next.values) x += bcfg.greedy_tolerance;
    return {std::move(g.policy), std::move(next)};
}

RmpiResult rmpi(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& init,
                const BellmanConfig& bcfg, const std::optional<StateValues>& reference, const NumericConfig& cfg) {
    if (lambda < 0.0)
        throw ArgumentError("rmpi: negative lambda");
    bcfg.validate();
    if (reference) check_values(mdp, *reference);
    const auto& mu = mdp.initial_dist();

    auto record = [&](std::size_t k, const Policy& pi, const StateValues& v, SolverTrace& trace) {
        TraceRow row;
        row.iteration = k;
        row.lambda = lambda;
        const bool exact = !bcfg.eval_steps && !bcfg.adversarial;
        const StateValues exact_v = exact || k == 0 ? v : regularized_value(mdp, pi, reg, lambda, cfg);
        row.objective = exact_v.expect(mu);
        if (reference) row.gap = sup_distance(reference->values, exact_v.values);
        row.min_prob = pi.min_prob();
        trace.rows.push_back(row);
    };

    RmpiResult res{init, regularized_value(mdp, init, reg, lambda, cfg), {}};
    record(0, res.policy, res.values, res.trace);
    Policy best = init;
    double best_gap = res.trace.rows.back().gap;
    res.trace.status = SolverStatus::budget;
    for (std::size_t k = 1; k <= bcfg.max_iterations; ++k) {
        RmpiStep step = rmpi_step(mdp, reg, lambda, res.values, bcfg, cfg);
        const double diff = sup_distance(step.values.values, res.values.values);
        res.policy = std::move(step.policy);
        res.values = std::move(step.values);
        record(k, res.policy, res.values, res.trace);
        if (reference && !(res.trace.rows.back().gap > best_gap)) {
            best_gap = res.trace.rows.back().gap;
            best = res.policy;
        }
        if (diff <= bcfg.convergence_tolerance) {
            res.trace.status = SolverStatus::converged;
            break;
        }
    }
    if (reference && res.trace.status == SolverStatus::budget) res.policy = best;
    return res;
}

AlternatingResult rmpi_alternating(const TabularMdp& mdp, const Regularizer& reg, double lambda0,
                                   const StateValues& init_v, const Policy& init_policy, std::size_t epochs,
                                   double eps0, bool adversarial, const std::optional<StateValues>& optimal_values,
                                   const NumericConfig& cfg) {
    if (!(lambda0 >= 0.0))
        throw ArgumentError("rmpi_alternating: negative lambda0");
    if (eps0 < 0.0)
        throw ArgumentError("rmpi_alternating: negative eps0");
    check_values(mdp, init_v);
    const double g = mdp.discount();
    AlternatingResult res{init_policy, {}, {lambda0}, 0.5 <= g * g};
    if (!res.gamma_precondition)
        res.trace.warnings.push_back("gamma^2 < 1/2: alternating-reduction bound precondition unmet");

    auto record = [&](std::size_t t, double lambda, const Policy& pi) {
        TraceRow row;
        row.iteration = t;
        row.lambda = lambda;
        const StateValues v = evaluate_policy(mdp, pi, cfg);
        row.objective = v.expect(mdp.initial_dist());
        if (optimal_values) row.gap = sup_distance(optimal_values->values, v.values);
        row.min_prob = pi.min_prob();
        res.trace.rows.push_back(row);
    };

    record(0, lambda0, res.policy);
    StateValues v = init_v;
    double lambda = lambda0;
    for (std::size_t t = 0; t < epochs; ++t) {
        v = apply_bellman(mdp, res.policy, reg, lambda, v, cfg);
        if (adversarial)
            for (double& x : v.values) x += eps0;
        lambda = std::ldexp(lambda0, -static_cast<int>(t + 1));
        res.policy = regularized_greedy(mdp, reg, lambda, v, eps0, cfg).policy;
        res.lambdas.push_back(lambda);
        record(t + 1, lambda, res.policy);
    }
    res.trace.status = SolverStatus::completed;
    return res;
}

double alternating_bound(double gamma, double lambda0, double c_phi, double eps0, std::size_t epochs,
                         double initial_distance) {
    const double T = static_cast<double>(epochs);
    const double w = 1.0 - gamma;
    return 4.0 * std::pow(gamma, T) * lambda0 * c_phi / (w * w) + 2.0 * eps0 / (w * w) +
           2.0 * std::pow(gamma, T + 1.0) * initial_distance / w;
}

} // namespace rmdp
