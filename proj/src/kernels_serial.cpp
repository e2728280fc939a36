#include "rmdp/kernels.hpp"

#include <algorithm>

namespace rmdp::kernels::serial {

void q_backup(const TabularMdp& mdp, std::span<const double> v, std::span<double> q) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = mdp.transition(s, a);
            double acc = 0.0;
            for (std::size_t t = 0; t < S; ++t) acc += row[t] * v[t];
            q[s * A + a] = mdp.reward(s, a) + g * acc;
        }
}

void policy_backup(const TabularMdp& mdp, const Policy& policy, std::span<const double> omega, double lambda,
                   std::span<const double> v, std::span<double> out) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = mdp.transition(s, a);
            double e = 0.0;
            for (std::size_t t = 0; t < S; ++t) e += row[t] * v[t];
            acc += policy(s, a) * (mdp.reward(s, a) + g * e);
        }
        out[s] = acc - lambda * omega[s];
    }
}

std::size_t greedy_rows(const Regularizer& reg, std::span<const double> q, std::size_t num_actions, double lambda,
                        std::span<double> probs, std::span<double> values, double tol, std::size_t max_iterations) {
    const std::size_t S = q.size() / num_actions;
    std::size_t worst = 0;
    for (std::size_t s = 0; s < S; ++s) {
        const auto r = local_greedy(reg, q.subspan(s * num_actions, num_actions), lambda,
                                    probs.subspan(s * num_actions, num_actions), tol, max_iterations);
        values[s] = r.value;
        worst = std::max(worst, r.iterations);
    }
    return worst;
}

void project_rows(std::span<const double> y, std::size_t num_actions, double lower, std::span<double> out) {
    const std::size_t S = y.size() / num_actions;
    for (std::size_t s = 0; s < S; ++s)
        project_simplex_row(y.subspan(s * num_actions, num_actions), out.subspan(s * num_actions, num_actions),
                            lower);
}

} // namespace rmdp::kernels::serial
