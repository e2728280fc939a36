#pragma once

#include "rmdp/experiments.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testing {

using namespace rmdp;

inline TabularMdp random_mdp(std::uint64_t seed, std::size_t S = 8, std::size_t A = 3, double gamma = 0.9,
                             double sparsity = 1.0) {
    return generate_random_mdp(S, A, sparsity, seed, gamma);
}

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng, double floor = 0.0) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double sum = 0.0;
    for (double& x : p) sum += (x = e(rng));
    for (double& x : p) x = floor + (1.0 - floor * static_cast<double>(n)) * x / sum;
    return p;
}

inline Policy random_policy(std::size_t S, std::size_t A, std::mt19937_64& rng, double floor = 0.0) {
    std::vector<double> probs;
    for (std::size_t s = 0; s < S; ++s) {
        auto row = random_simplex(A, rng, floor);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return {S, A, std::move(probs)};
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

/// V = r_pi - lambda Omega + gamma P_pi V by plain iteration.
inline std::vector<double> fixed_point_value(const TabularMdp& mdp, const Policy& pi, const Regularizer& reg,
                                             double lambda) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> v(S, 0.0), next(S);
    for (int it = 0; it < 100000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double acc = -lambda * reg.value(pi.row(s));
            for (std::size_t a = 0; a < A; ++a) {
                double ev = 0.0;
                const auto row = mdp.transition(s, a);
                for (std::size_t t = 0; t < S; ++t) ev += row[t] * v[t];
                acc += pi(s, a) * (mdp.reward(s, a) + mdp.discount() * ev);
            }
            next[s] = acc;
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff < 1e-14) break;
    }
    return v;
}

/// start P_pi^k for the policy-induced chain.
inline std::vector<double> push_forward(const TabularMdp& mdp, const Policy& pi, std::vector<double> d) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> out(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double w = d[s] * pi(s, a);
            const auto row = mdp.transition(s, a);
            for (std::size_t t = 0; t < S; ++t) out[t] += w * row[t];
        }
    return out;
}

/// Truncated series (1 - gamma) sum_k gamma^k start P_pi^k.
inline std::vector<double> series_visitation(const TabularMdp& mdp, const Policy& pi, std::vector<double> start,
                                             std::size_t terms = 4000) {
    const double g = mdp.discount();
    std::vector<double> d(start.size(), 0.0), cur = std::move(start);
    double w = 1.0 - g;
    for (std::size_t k = 0; k < terms; ++k) {
        for (std::size_t s = 0; s < d.size(); ++s) d[s] += w * cur[s];
        cur = push_forward(mdp, pi, cur);
        w *= g;
    }
    return d;
}

/// Tangent direction on the simplex: rows sum to zero.
inline std::vector<double> tangent_direction(std::size_t S, std::size_t A, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> d(S * A);
    for (std::size_t s = 0; s < S; ++s) {
        double mean = 0.0;
        for (std::size_t a = 0; a < A; ++a) mean += (d[s * A + a] = n(rng));
        mean /= static_cast<double>(A);
        for (std::size_t a = 0; a < A; ++a) d[s * A + a] -= mean;
    }
    return d;
}

inline Policy shifted(const Policy& pi, const std::vector<double>& dir, double h) {
    std::vector<double> p(pi.probs().begin(), pi.probs().end());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += h * dir[i];
    return {pi.num_states(), pi.num_actions(), std::move(p), 1e-8};
}

} // namespace testing
