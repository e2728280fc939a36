#include "rmdp/grad.hpp"

#include "rmdp/errors.hpp"
#include "rmdp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace rmdp {

double GradientField::tangent_norm() const {
    const std::size_t A = partials.num_actions;
    double sq = 0.0;
    for (std::size_t s = 0; s < partials.num_states; ++s) {
        double mean = 0.0;
        for (std::size_t a = 0; a < A; ++a) mean += partials(s, a);
        mean /= static_cast<double>(A);
        for (std::size_t a = 0; a < A; ++a) sq += (partials(s, a) - mean) * (partials(s, a) - mean);
    }
    return std::sqrt(sq);
}

SoftmaxParams SoftmaxParams::zeros(std::size_t num_states, std::size_t num_actions) {
    return {num_states, num_actions, std::vector<double>(num_states * num_actions, 0.0)};
}

SoftmaxParams SoftmaxParams::from_policy(const Policy& policy) {
    SoftmaxParams p{policy.num_states(), policy.num_actions(), {}};
    p.theta.reserve(policy.probs().size());
    for (double x : policy.probs()) {
        if (!(x > 0.0))
            throw ArgumentError("softmax parameters need a strictly positive policy");
        p.theta.push_back(std::log(x));
    }
    return p;
}

namespace {

/// log pi_theta(.|s) for every state.
std::vector<double> log_softmax(const SoftmaxParams& p) {
    std::vector<double> out(p.theta.size());
    const std::size_t A = p.num_actions;
    for (std::size_t s = 0; s < p.num_states; ++s) {
        const double* th = p.theta.data() + s * A;
        const double m = *std::max_element(th, th + A);
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) z += std::exp(th[a] - m);
        const double lz = m + std::log(z);
        for (std::size_t a = 0; a < A; ++a) out[s * A + a] = th[a] - lz;
    }
    return out;
}

void check_shape(const TabularMdp& mdp, std::size_t S, std::size_t A) {
    if (S != mdp.num_states() || A != mdp.num_actions())
        throw ShapeError("policy shape does not match mdp");
}

/// Gradient with respect to pi given grad omega per state-action, plus J_nu.
GradientField policy_gradient(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                              std::span<const double> nu, std::span<const double> omega_grad, double* value,
                              const NumericConfig& cfg) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    const auto d = visitation_distribution(mdp, policy, nu, cfg).weights;
    const QResult qr = q_values(mdp, policy, reg, lambda, cfg);
    if (value) *value = qr.v.expect(nu);
    GradientField field{{S, A, std::vector<double>(S * A)}, Distribution(nu.begin(), nu.end())};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            field.partials(s, a) = d[s] / (1.0 - g) * (qr.q(s, a) - lambda * omega_grad[s * A + a]);
    return field;
}

std::vector<double> floored_omega_grad(const Regularizer& reg, const Policy& policy) {
    const std::size_t A = policy.num_actions();
    std::vector<double> out(policy.probs().size());
    for (std::size_t s = 0; s < policy.num_states(); ++s)
        reg.gradient(policy.row(s), std::span<double>(out.data() + s * A, A));
    return out;
}

double frob_sq(std::span<const double> x, std::span<const double> y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - y[i]) * (x[i] - y[i]);
    return d;
}

double resolve_step(std::optional<double> step, double auto_value) {
    if (!step) return auto_value;
    if (!(*step > 0.0) || !std::isfinite(*step))
        throw ArgumentError("step size must be positive and finite");
    return *step;
}

} // namespace

GradientField exact_gradient(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                             std::span<const double> nu, const NumericConfig& cfg) {
    check_shape(mdp, policy.num_states(), policy.num_actions());
    check_distribution(nu, mdp.num_states(), "exact_gradient nu");
    if (lambda < 0.0)
        throw ArgumentError("exact_gradient: negative lambda");
    return policy_gradient(mdp, policy, reg, lambda, nu, floored_omega_grad(reg, policy), nullptr, cfg);
}

Policy simplex_project(std::span<const double> point, std::size_t num_states, std::size_t num_actions, double lower,
                       Exec exec) {
    if (point.size() != num_states * num_actions)
        throw ShapeError("simplex_project: point size does not match shape");
    for (double x : point)
        if (!std::isfinite(x))
            throw ArgumentError("simplex_project: non-finite input");
    std::vector<double> out(point.size());
    kernels::project_rows(exec, point, num_actions, lower, out);
    return {num_states, num_actions, std::move(out)};
}

SmoothnessEstimate smoothness_constant(const TabularMdp& mdp, const Regularizer& reg, double lambda) {
    if (lambda < 0.0)
        throw ArgumentError("smoothness_constant: negative lambda");
    const double g = mdp.discount();
    const double n = static_cast<double>(mdp.num_actions());
    const BoundConstants b = reg.bounds(mdp.num_actions());
    const double w = 1.0 - g;
    SmoothnessEstimate e;
    e.unregularized = 4.0 * g * n * mdp.r_max() / (w * w * w);
    e.per_lambda = (4.0 * g * n * b.c_phi + 2.0 * w * std::sqrt(n) * b.c_phi_1 + w * w * b.c_phi_2) / (w * w * w);
    e.l_lambda = e.unregularized + lambda * e.per_lambda;
    return e;
}

Policy pga_step_with(const Policy& policy, const GradientField& grad, double eta, double floor, Exec exec) {
    const auto p = policy.probs();
    std::vector<double> y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) y[i] = p[i] + eta * grad.partials.values[i];
    return simplex_project(y, policy.num_states(), policy.num_actions(), floor, exec);
}

PgaStep pga_step(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& policy,
                 std::span<const double> nu, double eta, const NumericConfig& cfg) {
    if (!(eta > 0.0))
        throw ArgumentError("pga: step must be positive");
    PgaStep out;
    const GradientField grad =
        policy_gradient(mdp, policy, reg, lambda, nu, floored_omega_grad(reg, policy), &out.objective_before, cfg);
    out.grad_norm = grad.tangent_norm();
    out.policy = pga_step_with(policy, grad, eta, reg.floor(), cfg.exec);
    out.step_sq = frob_sq(out.policy.probs(), policy.probs());
    out.objective_after = regularized_value(mdp, out.policy, reg, lambda, cfg).expect(nu);
    return out;
}

PgaResult pga(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& init,
              std::span<const double> nu, std::optional<double> step, std::size_t iterations,
              std::optional<double> optimal_objective, const NumericConfig& cfg) {
    check_shape(mdp, init.num_states(), init.num_actions());
    check_distribution(nu, mdp.num_states(), "pga nu");
    if (lambda < 0.0)
        throw ArgumentError("pga: negative lambda");
    if (reg.floor() * static_cast<double>(mdp.num_actions()) >= 1.0)
        throw ArgumentError("pga: interior floor times |A| must be below 1");
    const double L = smoothness_constant(mdp, reg, lambda).l_lambda;
    const double eta = resolve_step(step, L > 0.0 ? 1.0 / L : 1.0);
    const double coef = (2.0 - eta * L) / (2.0 * eta);

    PgaResult res{init, init, 0, eta, L, {}};
    double j = objective(mdp, init, reg, lambda, nu, cfg);
    double best = j;
    TraceRow row0;
    row0.lambda = lambda;
    row0.objective = j;
    if (optimal_objective) row0.gap = *optimal_objective - j;
    row0.min_prob = init.min_prob();
    res.trace.rows.push_back(row0);
    for (std::size_t t = 1; t <= iterations; ++t) {
        PgaStep s = pga_step(mdp, reg, lambda, res.policy, nu, eta, cfg);
        TraceRow row;
        row.iteration = t;
        row.lambda = lambda;
        row.objective = s.objective_after;
        if (optimal_objective) row.gap = *optimal_objective - s.objective_after;
        row.grad_norm = s.grad_norm;
        row.step_sq = s.step_sq;
        row.improvement_slack = s.objective_after - s.objective_before - coef * s.step_sq;
        row.min_prob = s.policy.min_prob();
        res.trace.rows.push_back(row);
        res.policy = std::move(s.policy);
        if (s.objective_after > best) {
            best = s.objective_after;
            res.best_policy = res.policy;
            res.best_index = t;
        }
        j = s.objective_after;
    }
    res.trace.status = SolverStatus::completed;
    return res;
}

GradientField softmax_gradient(const TabularMdp& mdp, const Regularizer& reg, double lambda,
                               const SoftmaxParams& params, std::span<const double> nu, const NumericConfig& cfg) {
    check_shape(mdp, params.num_states, params.num_actions);
    check_distribution(nu, mdp.num_states(), "softmax_gradient nu");
    const std::size_t S = params.num_states, A = params.num_actions;
    const Policy pi = params.policy();
    std::vector<double> omega_grad;
    if (reg.is_entropy_family()) {
        omega_grad = log_softmax(params);
        for (double& x : omega_grad) x += 1.0;
    } else {
        omega_grad = floored_omega_grad(reg, pi);
    }
    GradientField g = policy_gradient(mdp, pi, reg, lambda, nu, omega_grad, nullptr, cfg);
    for (std::size_t s = 0; s < S; ++s) {
        double avg = 0.0;
        for (std::size_t a = 0; a < A; ++a) avg += pi(s, a) * g.partials(s, a);
        for (std::size_t a = 0; a < A; ++a) g.partials(s, a) = pi(s, a) * (g.partials(s, a) - avg);
    }
    return g;
}

Policy SoftmaxParams::policy() const {
    std::vector<double> lp = log_softmax(*this);
    for (double& x : lp) x = std::exp(x);
    for (std::size_t s = 0; s < num_states; ++s) {
        double z = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) z += lp[s * num_actions + a];
        for (std::size_t a = 0; a < num_actions; ++a) lp[s * num_actions + a] /= z;
    }
    return {num_states, num_actions, std::move(lp)};
}

double softmax_auto_step(double gamma, double lambda, std::size_t num_actions) {
    const double w = 1.0 - gamma;
    return w * w * w / (8.0 + lambda * (4.0 + 8.0 * std::log(static_cast<double>(num_actions))));
}

SoftmaxResult softmax_pg(const TabularMdp& mdp, const Regularizer& reg, double lambda, const SoftmaxParams& init,
                         std::span<const double> nu, std::optional<double> step, std::size_t iterations,
                         std::optional<double> optimal_objective, const NumericConfig& cfg) {
    if (!reg.is_entropy_family())
        throw UnsupportedError("softmax_pg: requires an entropy-family regularizer");
    if (lambda < 0.0)
        throw ArgumentError("softmax_pg: negative lambda");
    check_shape(mdp, init.num_states, init.num_actions);
    const double eta = resolve_step(step, softmax_auto_step(mdp.discount(), lambda, mdp.num_actions()));
    SoftmaxResult res{init, eta, {}};
    double c_est = 1.0;
    auto record = [&](std::size_t t, const Policy& pi, double grad_norm) {
        TraceRow row;
        row.iteration = t;
        row.lambda = lambda;
        row.objective = objective(mdp, pi, reg, lambda, nu, cfg);
        if (optimal_objective) row.gap = *optimal_objective - row.objective;
        row.grad_norm = grad_norm;
        c_est = std::min(c_est, pi.min_prob());
        row.min_prob = c_est;
        res.trace.rows.push_back(row);
    };
    record(0, init.policy(), kNaN);
    for (std::size_t t = 1; t <= iterations; ++t) {
        const GradientField g = softmax_gradient(mdp, reg, lambda, res.params, nu, cfg);
        double sq = 0.0;
        for (std::size_t i = 0; i < g.partials.values.size(); ++i) {
            res.params.theta[i] += eta * g.partials.values[i];
            sq += g.partials.values[i] * g.partials.values[i];
        }
        record(t, res.params.policy(), std::sqrt(sq));
    }
    res.trace.status = SolverStatus::completed;
    return res;
}

Policy mdpo_update(const TabularMdp& mdp, const Regularizer& reg, double lambda, const Policy& policy, double eta,
                   const NumericConfig& cfg) {
    if (!reg.is_entropy_family())
        throw UnsupportedError("mdpo_update: requires an entropy-family regularizer");
    if (!(eta > 0.0))
        throw ArgumentError("mdpo_update: eta must be positive");
    if (lambda < 0.0)
        throw ArgumentError("mdpo_update: negative lambda");
    const double keep = 1.0 - lambda * eta;
    if (keep < -1e-12)
        throw ArgumentError("mdpo_update: lambda * eta exceeds 1");
    check_shape(mdp, policy.num_states(), policy.num_actions());
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const QResult qr = q_values(mdp, policy, reg, lambda, cfg);
    std::vector<double> logits(S * A), out(S * A);
    const bool use_old = std::abs(keep) > 1e-12;
    for (std::size_t s = 0; s < S; ++s) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            double l = eta * qr.q(s, a);
            if (use_old) l += policy(s, a) > 0.0 ? keep * std::log(policy(s, a)) : -std::numeric_limits<double>::infinity();
            logits[s * A + a] = l;
            m = std::max(m, l);
        }
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            out[s * A + a] = std::exp(logits[s * A + a] - m);
            z += out[s * A + a];
        }
        for (std::size_t a = 0; a < A; ++a) out[s * A + a] /= z;
    }
    return {S, A, std::move(out)};
}

} // namespace rmdp
