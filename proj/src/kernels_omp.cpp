#include "rmdp/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace rmdp::kernels::omp {

namespace {
constexpr std::size_t kMinParallelRows = 64;
inline std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }
} // namespace

void q_backup(const TabularMdp& mdp, std::span<const double> v, std::span<double> q) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
#pragma omp parallel for schedule(static) if (S >= kMinParallelRows)
    for (std::ptrdiff_t si = 0; si < signed_size(S); ++si) {
        const auto s = static_cast<std::size_t>(si);
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = mdp.transition(s, a);
            double acc = 0.0;
            for (std::size_t t = 0; t < S; ++t) acc += row[t] * v[t];
            q[s * A + a] = mdp.reward(s, a) + g * acc;
        }
    }
}

void policy_backup(const TabularMdp& mdp, const Policy& policy, std::span<const double> omega, double lambda,
                   std::span<const double> v, std::span<double> out) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
#pragma omp parallel for schedule(static) if (S >= kMinParallelRows)
    for (std::ptrdiff_t si = 0; si < signed_size(S); ++si) {
        const auto s = static_cast<std::size_t>(si);
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
#pragma omp parallel for schedule(dynamic) if (S >= kMinParallelRows) reduction(max : worst)
    for (std::ptrdiff_t si = 0; si < signed_size(S); ++si) {
        const auto s = static_cast<std::size_t>(si);
        const auto r = local_greedy(reg, q.subspan(s * num_actions, num_actions), lambda,
                                    probs.subspan(s * num_actions, num_actions), tol, max_iterations);
        values[s] = r.value;
        worst = std::max(worst, r.iterations);
    }
    return worst;
}

void project_rows(std::span<const double> y, std::size_t num_actions, double lower, std::span<double> out) {
    const std::size_t S = y.size() / num_actions;
#pragma omp parallel for schedule(static) if (S >= kMinParallelRows)
    for (std::ptrdiff_t si = 0; si < signed_size(S); ++si) {
        const auto s = static_cast<std::size_t>(si);
        project_simplex_row(y.subspan(s * num_actions, num_actions), out.subspan(s * num_actions, num_actions),
                            lower);
    }
}

} // namespace rmdp::kernels::omp
