#include "support.hpp"

#include "rmdp/bellman.hpp"
#include "rmdp/errors.hpp"

#include <doctest.h>

using namespace rmdp;
using namespace testing;

namespace {

// Best deterministic policy by enumeration; returns its value vector.
std::vector<double> brute_force_optimum(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<std::size_t> acts(S, 0);
    std::vector<double> best(S, -1e300);
    for (;;) {
        const auto v = evaluate_policy(mdp, Policy::deterministic(acts, A)).values;
        for (std::size_t s = 0; s < S; ++s) best[s] = std::max(best[s], v[s]);
        std::size_t i = 0;
        while (i < S && ++acts[i] == A) acts[i++] = 0;
        if (i == S) break;
    }
    return best;
}

std::vector<double> q_from(const TabularMdp& mdp, const std::vector<double>& v, std::size_t s) {
    std::vector<double> q(mdp.num_actions());
    for (std::size_t a = 0; a < q.size(); ++a) {
        double ev = 0.0;
        for (std::size_t t = 0; t < mdp.num_states(); ++t) ev += mdp.transition(s, a)[t] * v[t];
        q[a] = mdp.reward(s, a) + mdp.discount() * ev;
    }
    return q;
}

} // namespace

TEST_CASE("apply_bellman") {
    const TabularMdp mdp = random_mdp(7);
    std::mt19937_64 rng(1);
    const Policy pi = random_policy(8, 3, rng);
    const Regularizer reg = Regularizer::shifted_entropy();
    const StateValues v{random_values(8, rng)};

    const auto t0 = apply_bellman(mdp, pi, reg, 0.0, v);
    for (std::size_t s = 0; s < 8; ++s) {
        const auto q = q_from(mdp, v.values, s);
        double expect = 0.0;
        for (std::size_t a = 0; a < 3; ++a) expect += pi(s, a) * q[a];
        CHECK(t0[s] == doctest::Approx(expect).epsilon(1e-14));
    }

    const auto fixed = regularized_value(mdp, pi, reg, 0.4);
    CHECK(sup_distance(apply_bellman(mdp, pi, reg, 0.4, fixed).values, fixed.values) <= 1e-9);
}

TEST_CASE("regularized Bellman operator is a gamma-contraction") {
    std::mt19937_64 rng(2);
    const std::vector<Regularizer> regs{Regularizer::shifted_entropy(), Regularizer::squared_l2(),
                                        Regularizer::tsallis(1.5)};
    for (int k = 0; k < 2000; ++k) {
        const TabularMdp mdp = random_mdp(k, 5, 3, 0.5 + 0.45 * (k % 3) / 2.0);
        const Policy pi = random_policy(5, 3, rng);
        const StateValues v1{random_values(5, rng)}, v2{random_values(5, rng)};
        const double lambda = 0.1 * (k % 10);
        const Regularizer& reg = regs[k % regs.size()];
        const double lhs = sup_distance(apply_bellman(mdp, pi, reg, lambda, v1).values,
                                        apply_bellman(mdp, pi, reg, lambda, v2).values);
        CHECK(lhs <= mdp.discount() * sup_distance(v1.values, v2.values) + 1e-12);
    }
}

TEST_CASE("regularized_greedy") {
    const TabularMdp mdp = random_mdp(7);
    std::mt19937_64 rng(3);
    const StateValues v{random_values(8, rng, 1.0)};

    const auto big = regularized_greedy(mdp, Regularizer::shifted_entropy(), 1e9, StateValues{std::vector<double>(8, 0.0)});
    for (double p : big.policy.probs()) CHECK(p == doctest::Approx(1.0 / 3.0));

    const auto zero = regularized_greedy(mdp, Regularizer::shifted_entropy(), 0.0, v);
    for (std::size_t s = 0; s < 8; ++s) {
        const auto q = q_from(mdp, v.values, s);
        const auto best = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
        CHECK(zero.policy(s, best) == 1.0);
    }

    // per-state value is at least that of any probe distribution
    for (const Regularizer& reg : {Regularizer::shifted_entropy(), Regularizer::squared_l2(), Regularizer::tsallis(1.5)}) {
        const auto g = regularized_greedy(mdp, reg, 0.3, v);
        double worst = 0.0;
        for (std::size_t s = 0; s < 8; ++s) {
            const auto q = q_from(mdp, v.values, s);
            for (int k = 0; k < 500; ++k) {
                const auto p = random_simplex(3, rng, reg.floor());
                double val = -0.3 * reg.value(p);
                for (std::size_t a = 0; a < 3; ++a) val += p[a] * q[a];
                worst = std::max(worst, val - g.values[s]);
            }
        }
        CHECK(worst <= 1e-9);
    }
    CHECK_THROWS_AS(regularized_greedy(mdp, Regularizer::squared_l2(), -1.0, v), ArgumentError);
}

TEST_CASE("soft_optimal_oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TabularMdp mdp = random_mdp(seed, 5, 2, 0.9);
        const auto o = soft_optimal_oracle(mdp, Regularizer::shifted_entropy(), 0.0, 1e-12);
        CHECK(sup_distance(o.values.values, brute_force_optimum(mdp)) <= 1e-9);
    }
    // entropy: V(s) = lambda log mean exp(Q / lambda)
    const TabularMdp mdp = random_mdp(7);
    const double lambda = 0.5;
    const auto o = soft_optimal_oracle(mdp, Regularizer::shifted_entropy(), lambda, 1e-12);
    double worst = 0.0;
    for (std::size_t s = 0; s < 8; ++s) {
        const auto q = q_from(mdp, o.values.values, s);
        double z = 0.0;
        for (double x : q) z += std::exp(x / lambda) / 3.0;
        worst = std::max(worst, std::abs(o.values[s] - lambda * std::log(z)));
    }
    CHECK(worst <= 1e-11);
    const auto v_pi = regularized_value(mdp, o.policy, Regularizer::shifted_entropy(), lambda);
    CHECK(sup_distance(v_pi.values, o.values.values) <= 1e-10);
}

TEST_CASE("bias of the regularized optimum") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TabularMdp mdp = random_mdp(seed, 6, 3, seed % 2 ? 0.9 : 0.5);
        const auto vstar = soft_optimal_oracle(mdp, Regularizer::squared_l2(), 0.0, 1e-12).values;
        for (const Regularizer& reg : {Regularizer::shifted_entropy(), Regularizer::squared_l2()})
            for (double lambda : {0.05, 0.2, 1.0}) {
                const Policy p = soft_optimal_oracle(mdp, reg, lambda, 1e-12).policy;
                const double gap = sup_distance(vstar.values, evaluate_policy(mdp, p).values);
                CHECK(gap <= lambda * reg.bounds(3).c_phi / (1.0 - mdp.discount()) + 1e-8);
            }
    }
}

TEST_CASE("rmpi") {
    const TabularMdp mdp = random_mdp(7);
    const Policy init = Policy::uniform(8, 3);

    SUBCASE("lambda = 0 reduces to policy iteration") {
        BellmanConfig bcfg;
        const auto res = rmpi(mdp, Regularizer::shifted_entropy(), 0.0, init, bcfg);
        CHECK(res.trace.status == SolverStatus::converged);
        CHECK(sup_distance(evaluate_policy(mdp, res.policy).values, brute_force_optimum(mdp)) <= 1e-9);
    }
    SUBCASE("entropy matches the oracle policy") {
        const Regularizer reg = Regularizer::shifted_entropy();
        const auto o = soft_optimal_oracle(mdp, reg, 0.5, 1e-12);
        BellmanConfig bcfg;
        bcfg.convergence_tolerance = 1e-13;
        const auto res = rmpi(mdp, reg, 0.5, init, bcfg, o.values);
        CHECK(max_row_total_variation(res.policy, o.policy) <= 1e-6);
    }
    SUBCASE("exact evaluation improves monotonically and contracts the gap by a quarter") {
        const Regularizer reg = Regularizer::shifted_entropy();
        const auto o = soft_optimal_oracle(mdp, reg, 0.3, 1e-12);
        BellmanConfig bcfg;
        bcfg.max_iterations = 30;
        const auto res = rmpi(mdp, reg, 0.3, init, bcfg, o.values);
        const auto& rows = res.trace.rows;
        StateValues prev = regularized_value(mdp, init, reg, 0.3);
        Policy pi = init;
        for (std::size_t k = 0; k < 6; ++k) {
            RmpiStep st = rmpi_step(mdp, reg, 0.3, prev, bcfg);
            for (std::size_t s = 0; s < 8; ++s) CHECK(st.values[s] >= prev[s] - 1e-10);
            prev = st.values;
        }
        const auto k = static_cast<std::size_t>(std::ceil(std::log(4.0) / std::log(1.0 / 0.9)));
        for (std::size_t i = 0; i + k < rows.size(); ++i) CHECK(rows[i + k].gap <= 0.25 * rows[i].gap + 1e-12);
    }
    SUBCASE("finite evaluation steps converge to the oracle") {
        const Regularizer reg = Regularizer::squared_l2();
        const auto o = soft_optimal_oracle(mdp, reg, 0.3, 1e-12);
        BellmanConfig bcfg;
        bcfg.eval_steps = 3;
        bcfg.max_iterations = 2000;
        bcfg.convergence_tolerance = 1e-12;
        const auto res = rmpi(mdp, reg, 0.3, init, bcfg, o.values);
        CHECK(res.trace.rows.back().gap <= 1e-9);
    }
    SUBCASE("budget exhaustion returns the best policy") {
        BellmanConfig bcfg;
        bcfg.eval_steps = 1;
        bcfg.max_iterations = 3;
        const Regularizer reg = Regularizer::shifted_entropy();
        const auto o = soft_optimal_oracle(mdp, reg, 0.3, 1e-12);
        const auto res = rmpi(mdp, reg, 0.3, init, bcfg, o.values);
        CHECK(res.trace.status == SolverStatus::budget);
        CHECK(res.trace.rows.size() == 4);
    }
    SUBCASE("config validation") {
        BellmanConfig bad;
        bad.eval_steps = 0;
        CHECK_THROWS_AS(bad.validate(), ArgumentError);
        bad = {};
        bad.greedy_tolerance = -1.0;
        CHECK_THROWS_AS(rmpi(mdp, Regularizer::squared_l2(), 0.1, init, bad), ArgumentError);
    }
}

TEST_CASE("rmpi with approximate greedy steps") {
    const TabularMdp mdp = random_mdp(7);
    const Regularizer reg = Regularizer::tsallis(1.5);
    const auto o = soft_optimal_oracle(mdp, reg, 0.3, 1e-12);
    for (bool adversarial : {false, true}) {
        BellmanConfig bcfg;
        bcfg.greedy_tolerance = 1e-4;
        bcfg.adversarial = adversarial;
        bcfg.max_iterations = 200;
        const auto res = rmpi(mdp, reg, 0.3, Policy::uniform(8, 3), bcfg, o.values);
        // error propagation: 2 gamma eps0 / (1 - gamma)^2 plus the adversarial shift
        CHECK(res.trace.rows.back().gap <= 2.0 * 1e-4 / 0.01 + 1e-4 / 0.1);
    }
}

TEST_CASE("rmpi_alternating") {
    const TabularMdp mdp = random_mdp(7);
    const Regularizer reg = Regularizer::shifted_entropy();
    const StateValues v0{std::vector<double>(8, 0.0)};
    const Policy init = Policy::uniform(8, 3);

    const auto none = rmpi_alternating(mdp, reg, 1.0, v0, init, 0, 0.0);
    CHECK(none.policy == init);

    const auto vstar = soft_optimal_oracle(mdp, reg, 0.0, 1e-12).values;
    const auto res = rmpi_alternating(mdp, reg, 1.0, v0, init, 40, 0.0, false, vstar);
    CHECK(res.gamma_precondition);
    CHECK(res.lambdas.size() == 41);
    for (std::size_t t = 0; t < res.lambdas.size(); ++t) CHECK(res.lambdas[t] == std::ldexp(1.0, -static_cast<int>(t)));
    const double bound = alternating_bound(0.9, 1.0, reg.bounds(3).c_phi, 0.0, 40, sup_distance(vstar.values, v0.values));
    CHECK(res.trace.rows.back().gap <= bound);

    const auto low = rmpi_alternating(mdp.with_discount(0.6), reg, 1.0, v0, init, 3, 0.0);
    CHECK_FALSE(low.gamma_precondition);
    CHECK_FALSE(low.trace.warnings.empty());
}
