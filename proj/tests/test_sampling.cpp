#include "support.hpp"

#include "rmdp/bellman.hpp"
#include "rmdp/errors.hpp"
#include "rmdp/grad.hpp"
#include "rmdp/sampling.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <set>
#include <sstream>

using namespace rmdp;
using namespace testing;

namespace {

TabularMdp with_zero_rewards(const TabularMdp& m) {
    return {m.num_states(), m.num_actions(), std::vector<double>(m.rewards().size(), 0.0),
            std::vector<double>(m.transitions().begin(), m.transitions().end()), m.discount(), m.initial_dist()};
}

/// Pearson statistic with cells pooled until each expected count is at least 5.
std::pair<double, std::size_t> chi_square(const std::vector<double>& counts, const std::vector<double>& probs,
                                          double n) {
    double stat = 0.0, obs = 0.0, exp = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        obs += counts[i];
        exp += probs[i] * n;
        if (exp >= 5.0 || i + 1 == counts.size()) {
            stat += (obs - exp) * (obs - exp) / std::max(exp, 1e-300);
            ++cells;
            obs = exp = 0.0;
        }
    }
    return {stat, cells};
}

double chi_square_critical(std::size_t dof, double level) {
    return boost::math::quantile(boost::math::complement(boost::math::chi_squared(static_cast<double>(dof)), level));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TEST_CASE("seed derivation and pairwise sum") {
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(42, k));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));

    std::vector<double> x(1001);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    CHECK(pairwise_sum(x) == 500500.0);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);

    std::mt19937_64 rng(3);
    std::vector<double> counts(4, 0.0);
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    for (int i = 0; i < 200000; ++i) counts[sample_index(p, rng)] += 1.0;
    for (std::size_t i = 0; i < 4; ++i) CHECK(counts[i] / 200000.0 == doctest::Approx(p[i]).epsilon(0.02));
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(rng);
        CHECK((u >= 0.0 && u < 1.0));
    }
}

TEST_CASE("truncation horizon") {
    CHECK(truncation_horizon(0.1, 1.0, 1.0, 0.0) == 1);
    // argument 12 / (eps * 0.25) = 2^10
    CHECK(truncation_horizon(48.0 / 1024.0, 0.0, 3.0, 0.5) == 10);
    CHECK(truncation_horizon(24.0 / 1024.0, 0.0, 3.0, 0.5) == 11);
    CHECK(truncation_horizon(12.0 / 1024.0, 0.0, 3.0, 0.5) == 12);

    const double c = std::log(4.0);
    const double k = std::ceil(std::log(12.0 * (1.0 + c) / (0.1 * 0.01)) / std::log(10.0 / 9.0));
    CHECK(truncation_horizon(0.1, 1.0, c, 0.9) == static_cast<std::size_t>(k));
    CHECK(truncation_horizon(0.1, 1.0, c, 0.9) == 98);

    double prev = 0;
    for (double eps = 1.0; eps > 1e-6; eps /= 2.0) {
        const auto K = static_cast<double>(truncation_horizon(eps, 0.5, 1.0, 0.8));
        if (prev > 0) CHECK(std::abs(K - prev - std::log(2.0) / std::log(1.25)) <= 1.0);
        prev = K;
    }
    const auto plan = make_truncation_plan(0.05, 0.2, c, 0.9);
    CHECK(plan.horizon == truncation_horizon(0.05, 0.2, c, 0.9));
    CHECK(plan.horizon >= 1);

    CHECK_THROWS_AS(truncation_horizon(0.0, 1.0, 1.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(truncation_horizon(0.1, 1.0, 1.0, 1.0), ArgumentError);
}

TEST_CASE("simulator handle") {
    const TabularMdp mdp = random_mdp(5, 4, 2, 0.9);
    SimulatorHandle sim(mdp, 11);
    const auto nu = uniform_distribution(4);

    SUBCASE("transitions follow the model") {
        std::vector<double> counts(4, 0.0);
        const std::size_t n = 200000;
        for (std::size_t i = 0; i < n; ++i) {
            sim.reset(std::vector<double>{0.0, 1.0, 0.0, 0.0});
            const auto tr = sim.step(1);
            CHECK(tr.reward == mdp.reward(1, 1));
            counts[tr.state] += 1.0;
        }
        const auto row = mdp.transition(1, 1);
        const auto [stat, cells] = chi_square(counts, {row.begin(), row.end()}, static_cast<double>(n));
        CHECK(stat <= chi_square_critical(cells - 1, 0.01));
    }
    SUBCASE("forks are reproducible and independent") {
        sim.reset(nu);
        SimulatorHandle a = sim.fork(3), b = sim.fork(3), c = sim.fork(4);
        CHECK(a.state() == sim.state());
        bool differ = false;
        for (int i = 0; i < 50; ++i) {
            const auto x = a.step(0), y = b.step(0), z = c.step(0);
            CHECK(x.state == y.state);
            differ = differ || x.state != z.state;
        }
        CHECK(differ);
        CHECK(sim.next_batch_seed() != sim.next_batch_seed());
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(sim.reset(std::vector<double>{1.0}), ShapeError);
        CHECK_THROWS_AS(sim.step(2), ArgumentError);
    }
}

TEST_CASE("visitation start sampler") {
    SUBCASE("gamma zero returns the first draw") {
        const TabularMdp mdp = random_mdp(2, 5, 2, 0.0);
        std::mt19937_64 rng(1);
        const Policy pi = random_policy(5, 2, rng);
        const std::vector<double> nu{0.0, 0.0, 1.0, 0.0, 0.0};
        SimulatorHandle sim(mdp, 2);
        for (int i = 0; i < 100; ++i) CHECK(sample_visitation_start(sim, pi, nu, 10) == 2);
    }
    SUBCASE("single state") {
        const TabularMdp one(1, 2, {1.0, 0.0}, {1.0, 1.0}, 0.9, {1.0});
        SimulatorHandle sim(one, 2);
        for (int i = 0; i < 100; ++i) CHECK(sample_visitation_start(sim, Policy::uniform(1, 2), std::vector<double>{1.0}, 5) == 0);
    }
    SUBCASE("analytic marginal matches matrix powers") {
        const TabularMdp mdp = random_mdp(9, 6, 3, 0.7);
        std::mt19937_64 rng(4);
        const Policy pi = random_policy(6, 3, rng);
        std::vector<double> nu = random_simplex(6, rng);
        const std::size_t K = 7;
        std::vector<double> expect(6, 0.0), cur = nu;
        double w = 1.0;
        for (std::size_t t = 0; t < K; ++t) {
            for (std::size_t s = 0; s < 6; ++s) expect[s] += 0.3 * w * cur[s];
            cur = push_forward(mdp, pi, cur);
            w *= 0.7;
        }
        for (std::size_t s = 0; s < 6; ++s) expect[s] += w * cur[s];
        const auto d = truncated_visitation(mdp, pi, nu, K);
        for (std::size_t s = 0; s < 6; ++s) CHECK(d[s] == doctest::Approx(expect[s]).epsilon(1e-12));
        const auto long_run = truncated_visitation(mdp, pi, nu, 400);
        const auto exact = series_visitation(mdp, pi, nu);
        for (std::size_t s = 0; s < 6; ++s) CHECK(long_run[s] == doctest::Approx(exact[s]).epsilon(1e-10));
    }
    SUBCASE("chain histogram passes chi-square") {
        const TabularMdp chain = chain_mdp(12, 0.5, 0.1);
        std::mt19937_64 rng(5);
        const Policy pi = random_policy(12, 2, rng, 0.05);
        const auto& nu = chain.initial_dist();
        const std::size_t K = 30, n = 1000000;
        SimulatorHandle sim(chain, 77);
        std::vector<double> counts(12, 0.0);
        for (std::size_t i = 0; i < n; ++i) counts[sample_visitation_start(sim, pi, nu, K)] += 1.0;
        const auto d = truncated_visitation(chain, pi, nu, K);
        const auto [stat, cells] = chi_square(counts, d, static_cast<double>(n));
        CHECK(cells >= 3);
        CHECK(stat <= chi_square_critical(cells - 1, 0.01));
    }
    SUBCASE("truncation tail is forced") {
        const TabularMdp chain = chain_mdp(5, 0.99, 0.1);
        const Policy right(5, 2, std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
        const auto d = truncated_visitation(chain, right, chain.initial_dist(), 1);
        CHECK(d[0] == doctest::Approx(0.01));
        CHECK(d[0] + d[1] == doctest::Approx(1.0));
    }
    SUBCASE("zero horizon") {
        const TabularMdp mdp = random_mdp(1, 3, 2);
        SimulatorHandle sim(mdp, 1);
        CHECK_THROWS_AS(sample_visitation_start(sim, Policy::uniform(3, 2), uniform_distribution(3), 0), ArgumentError);
    }
}

TEST_CASE("q hat") {
    const auto reg = Regularizer::shifted_entropy();
    SUBCASE("one step returns the reward") {
        const TabularMdp mdp = random_mdp(6, 5, 3, 0.9);
        SimulatorHandle sim(mdp, 3);
        sim.reset(std::vector<double>{0, 0, 0, 1, 0});
        CHECK(q_hat(sim, Policy::uniform(5, 3), reg, 0.7, 3, 2, 1) == mdp.reward(3, 2));
    }
    SUBCASE("deterministic single state") {
        const TabularMdp one(1, 1, {1.0}, {1.0}, 0.5, {1.0});
        SimulatorHandle sim(one, 3);
        for (int i = 0; i < 5; ++i) {
            sim.reset(std::vector<double>{1.0});
            CHECK(q_hat(sim, Policy::uniform(1, 1), Regularizer::constant(0.0), 1.0, 0, 0, 10) == 1.998046875);
        }
        SamplingOptions opts{50, 10, false, Exec::serial};
        const auto e = estimate_value(sim, Policy::uniform(1, 1), Regularizer::constant(0.0), 1.0,
                                      std::vector<double>{1.0}, opts);
        CHECK(e.mean == 1.998046875);
        CHECK(e.std_error == 0.0);
    }
    SUBCASE("initial regularizer term") {
        const TabularMdp mdp = random_mdp(8, 4, 2, 0.8);
        std::mt19937_64 rng(8);
        const Policy pi = random_policy(4, 2, rng, 0.1);
        SimulatorHandle a(mdp, 9), b(mdp, 9);
        a.reset(std::vector<double>{1, 0, 0, 0});
        b.reset(std::vector<double>{1, 0, 0, 0});
        const double qa = q_hat(a, pi, reg, 0.4, 0, 1, 20, false);
        const double qb = q_hat(b, pi, reg, 0.4, 0, 1, 20, true);
        CHECK(qa - qb == doctest::Approx(0.4 * reg.value(pi.row(0))).epsilon(1e-12));
        const auto q0 = truncated_q(mdp, pi, reg, 0.4, 20, false);
        const auto q1 = truncated_q(mdp, pi, reg, 0.4, 20, true);
        CHECK(q0(0, 1) - q1(0, 1) == doctest::Approx(0.4 * reg.value(pi.row(0))).epsilon(1e-12));
    }
    SUBCASE("recorded trajectory") {
        const TabularMdp mdp = random_mdp(8, 4, 2, 0.8);
        SimulatorHandle sim(mdp, 9);
        sim.reset(std::vector<double>{0, 1, 0, 0});
        Trajectory tr;
        const Policy pi = Policy::uniform(4, 2);
        const double q = q_hat(sim, pi, reg, 0.0, 1, 0, 12, false, &tr);
        CHECK(tr.states.size() == 12);
        CHECK(tr.actions.size() == 12);
        CHECK(tr.rewards.size() == 12);
        CHECK(tr.omegas.size() == 12);
        double total = 0.0, w = 1.0;
        for (std::size_t t = 0; t < 12; ++t, w *= 0.8) {
            CHECK(tr.states[t] < 4);
            CHECK(tr.actions[t] < 2);
            CHECK(tr.rewards[t] == mdp.reward(tr.states[t], tr.actions[t]));
            total += w * tr.rewards[t];
        }
        CHECK(q == doctest::Approx(total).epsilon(1e-12));
        std::ostringstream os;
        dump_trajectories(os, std::span<const Trajectory>(&tr, 1));
        const std::string text = os.str();
        CHECK(text.find("\"states\"") != std::string::npos);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    }
    SUBCASE("monte carlo matches the truncated recursion") {
        const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
        std::mt19937_64 rng(7);
        const Policy pi = random_policy(8, 3, rng, 0.02);
        const std::size_t K = 25, n = 100000;
        const auto qbar = truncated_q(mdp, pi, reg, 0.3, K);
        SimulatorHandle sim(mdp, 21);
        for (const auto [s, a] : {std::pair<std::size_t, std::size_t>{0, 0}, {3, 1}, {7, 2}}) {
            std::vector<double> nu(8, 0.0);
            nu[s] = 1.0;
            double sum = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sim.reset(nu);
                const double q = q_hat(sim, pi, reg, 0.3, s, a, K);
                sum += q;
                sq += q * q;
            }
            const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / (n - 1));
            CHECK(std::abs(mean - qbar(s, a)) <= 3.0 * se);
        }
    }
    SUBCASE("truncated recursion converges to q values") {
        const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
        std::mt19937_64 rng(7);
        const Policy pi = random_policy(8, 3, rng, 0.02);
        const auto qbar = truncated_q(mdp, pi, reg, 0.3, 600);
        const auto exact = q_values(mdp, pi, reg, 0.3);
        for (std::size_t i = 0; i < 24; ++i)
            CHECK(qbar.values[i] == doctest::Approx(exact.q.values[i]).epsilon(1e-9));
    }
    SUBCASE("simulator must sit at s0") {
        const TabularMdp mdp = random_mdp(1, 3, 2);
        SimulatorHandle sim(mdp, 1);
        sim.reset(std::vector<double>{1, 0, 0});
        CHECK_THROWS_AS(q_hat(sim, Policy::uniform(3, 2), reg, 0.0, 2, 0, 3), ArgumentError);
        CHECK_THROWS_AS(q_hat(sim, Policy::uniform(3, 2), reg, 0.0, 0, 0, 0), ArgumentError);
    }
}

TEST_CASE("value estimator") {
    const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
    const auto reg = Regularizer::shifted_entropy();
    std::mt19937_64 rng(70);
    const Policy pi = random_policy(8, 3, rng, 0.02);
    const auto nu = uniform_distribution(8);
    const double c = reg.bounds(3).c_phi;

    SUBCASE("bias envelope at the theoretical horizon") {
        const double lambda = 0.3;
        const std::size_t K = truncation_horizon(0.05, lambda, c, 0.9);
        SimulatorHandle sim(mdp, 5);
        const auto e = estimate_value(sim, pi, reg, lambda, nu, {100000, K, false, Exec::parallel});
        const double j = objective(mdp, pi, reg, lambda, nu);
        CHECK(std::abs(e.mean - j) <= std::pow(0.9, K) * (1.0 + lambda * c) / 0.1 + 4.0 * e.std_error);
        CHECK(e.samples == 100000);
    }
    SUBCASE("short horizon shows the bias inside its envelope") {
        const std::size_t K = 5;
        SimulatorHandle sim(mdp, 6);
        const auto e = estimate_value(sim, pi, reg, 0.3, nu, {100000, K, false, Exec::parallel});
        const double j = objective(mdp, pi, reg, 0.3, nu);
        CHECK(std::abs(e.mean - j) <= std::pow(0.9, K) * (1.0 + 0.3 * c) / 0.1 + 4.0 * e.std_error);
        CHECK(std::abs(e.mean - j) > 4.0 * e.std_error);
    }
    SUBCASE("regularizer decomposition") {
        const std::size_t K = 200, n = 100000;
        SimulatorHandle a(mdp, 8), b(mdp, 8), z(with_zero_rewards(mdp), 8);
        const auto e0 = estimate_value(a, pi, reg, 0.0, nu, {n, K, false, Exec::parallel});
        const auto e3 = estimate_value(b, pi, reg, 0.3, nu, {n, K, false, Exec::parallel});
        const auto phi_hat = estimate_value(z, pi, reg, 1.0, nu, {n, K, false, Exec::parallel});
        CHECK(e0.mean - e3.mean == doctest::Approx(-0.3 * phi_hat.mean).epsilon(1e-9));
        const double phi = phi_accumulator(mdp, pi, reg).expect(nu);
        CHECK(std::abs(-phi_hat.mean - phi) <= 4.0 * phi_hat.std_error + std::pow(0.9, K) * c / 0.1);
    }
    SUBCASE("errors") {
        SimulatorHandle sim(mdp, 1);
        CHECK_THROWS_AS(estimate_value(sim, pi, reg, 0.1, nu, {0, 10, false, Exec::serial}), ArgumentError);
        CHECK_THROWS_AS(estimate_value(sim, pi, reg, 0.1, nu, {10, 0, false, Exec::serial}), ArgumentError);
    }
}

TEST_CASE("gradient estimator") {
    const auto reg = Regularizer::shifted_entropy();
    SUBCASE("bandit converges to the reward vector") {
        const TabularMdp bandit(1, 3, {0.2, 1.0, 0.5}, {1.0, 1.0, 1.0}, 0.0, {1.0});
        SimulatorHandle sim(bandit, 4);
        const auto g = estimate_gradient(sim, Policy::uniform(1, 3), reg, 0.0, std::vector<double>{1.0},
                                         {300000, 1, false, Exec::parallel});
        const auto exact = exact_gradient(bandit, Policy::uniform(1, 3), reg, 0.0, std::vector<double>{1.0});
        for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(g.partials(0, a) - exact.partials(0, a)) < 0.01);
    }
    SUBCASE("a single trajectory fills one cell") {
        const TabularMdp mdp = random_mdp(3, 5, 3, 0.8);
        SimulatorHandle sim(mdp, 4);
        for (int i = 0; i < 20; ++i) {
            const auto g = estimate_gradient(sim, Policy::uniform(5, 3), reg, 0.2, uniform_distribution(5),
                                             {1, 10, false, Exec::serial});
            std::size_t nonzero = 0;
            for (double x : g.partials.values) nonzero += x != 0.0;
            CHECK(nonzero <= 1);
        }
    }
    SUBCASE("directional bias within the truncation and concentration envelopes") {
        const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
        std::mt19937_64 rng(17);
        const Policy pi = random_policy(8, 3, rng, 0.05);
        const auto nu = uniform_distribution(8);
        const double lambda = 0.2;
        const auto b = reg.bounds(3);
        const std::size_t K = truncation_horizon(0.05, lambda, b.c_phi, 0.9);
        const std::size_t n = 100000;
        SimulatorHandle sim(mdp, 99);
        const auto est = estimate_gradient(sim, pi, reg, lambda, nu, {n, K, false, Exec::parallel});
        const auto exact = exact_gradient(mdp, pi, reg, lambda, nu);
        const double bias = 6.0 * std::pow(0.9, K) * (1.0 + lambda * b.c_phi) / 0.01;
        const double range = 3.0 * (1.0 + lambda * b.c_phi_1) / 0.01;
        for (int i = 0; i < 20; ++i) {
            const Policy other = random_policy(8, 3, rng);
            std::vector<double> d(24);
            double dmax = 0.0;
            for (std::size_t j = 0; j < 24; ++j) dmax = std::max(dmax, std::abs(d[j] = other.probs()[j] - pi.probs()[j]));
            const double width = range * dmax * std::sqrt(2.0 * std::log(2.0 / 0.01) / static_cast<double>(n));
            const double dev = std::abs(dot(est.partials.values, d) - dot(exact.partials.values, d));
            CHECK(dev <= bias + 4.0 * width);
        }
    }
    SUBCASE("errors") {
        const TabularMdp mdp = random_mdp(3, 5, 3, 0.8);
        SimulatorHandle sim(mdp, 4);
        CHECK_THROWS_AS(estimate_gradient(sim, Policy::uniform(5, 3), reg, 0.2, uniform_distribution(5),
                                          {0, 10, false, Exec::serial}),
                        ArgumentError);
    }
}

TEST_CASE("best policy selection") {
    const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
    const auto reg = Regularizer::shifted_entropy();
    const auto nu = uniform_distribution(8);
    const double lambda = 0.1;
    std::vector<Policy> cands;
    cands.push_back(Policy::uniform(8, 3));
    cands.push_back(soft_optimal_oracle(mdp, reg, lambda).policy);
    std::vector<double> worst(24, 0.0);
    const auto q = q_values(mdp, Policy::uniform(8, 3), reg, 0.0).q;
    for (std::size_t s = 0; s < 8; ++s) {
        std::size_t lo = 0;
        for (std::size_t a = 1; a < 3; ++a)
            if (q(s, a) < q(s, lo)) lo = a;
        worst[s * 3 + lo] = 1.0;
    }
    cands.emplace_back(8, 3, worst);
    std::vector<double> truth;
    for (const auto& c : cands) truth.push_back(objective(mdp, c, reg, lambda, nu));
    CHECK(truth[1] > truth[0]);
    CHECK(truth[0] > truth[2]);

    const SamplingOptions opts{4000, 60, false, Exec::parallel};
    SimulatorHandle probe(mdp, 1);
    double width = 0.0;
    for (const auto& c : cands) width = std::max(width, 4.0 * estimate_value(probe, c, reg, lambda, nu, opts).std_error);
    const double gap = std::min(truth[1] - truth[0], truth[0] - truth[2]);
    REQUIRE(gap > 5.0 * width);

    int hits = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        SimulatorHandle sim(mdp, 1000 + trial);
        const auto sel = select_best_policy(sim, cands, reg, lambda, nu, opts);
        CHECK(sel.estimates.size() == 3);
        hits += sel.index == 1;
    }
    CHECK(hits == 100);
}

TEST_CASE("selection edge cases") {
    const TabularMdp mdp = random_mdp(7, 8, 3, 0.9);
    const auto reg = Regularizer::shifted_entropy();
    const auto nu = uniform_distribution(8);
    const double lambda = 0.1;
    const std::vector<Policy> cands(2, Policy::uniform(8, 3));
    const SamplingOptions opts{500, 30, false, Exec::parallel};

    SUBCASE("single candidate and ties") {
        SimulatorHandle sim(mdp, 3);
        CHECK(select_best_policy(sim, std::span<const Policy>(cands.data(), 1), reg, lambda, nu, opts).index == 0);
        const TabularMdp one(1, 1, {1.0}, {1.0}, 0.5, {1.0});
        SimulatorHandle det(one, 3);
        const std::vector<Policy> trivial(3, Policy::uniform(1, 1));
        CHECK(select_best_policy(det, trivial, reg, lambda, std::vector<double>{1.0}, opts).index == 0);
    }
    SUBCASE("empty list") {
        SimulatorHandle sim(mdp, 3);
        CHECK_THROWS_AS(select_best_policy(sim, std::span<const Policy>{}, reg, lambda, nu, opts), ArgumentError);
    }
    SUBCASE("sample size formula") {
        const double n = 2.0 * 1.21 / (0.01 * 0.01) * std::log(10.0 / 0.05);
        CHECK(selection_sample_size(0.1, 0.1, 1.0, 0.9, 10, 0.05) == static_cast<std::size_t>(std::ceil(n)));
        CHECK(selection_sample_size(0.1, 0.1, 1.0, 0.9, 20, 0.05) > selection_sample_size(0.1, 0.1, 1.0, 0.9, 10, 0.05));
        CHECK_THROWS_AS(selection_sample_size(0.0, 0.1, 1.0, 0.9, 10, 0.05), ArgumentError);
        CHECK_THROWS_AS(selection_sample_size(0.1, 0.1, 1.0, 0.9, 0, 0.05), ArgumentError);
    }
}

TEST_CASE("estimators are reproducible across execution modes") {
    const TabularMdp mdp = random_mdp(12, 6, 3, 0.9);
    const auto reg = Regularizer::shifted_entropy();
    std::mt19937_64 rng(2);
    const Policy pi = random_policy(6, 3, rng, 0.01);
    const auto nu = uniform_distribution(6);
    SamplingOptions serial{20000, 40, false, Exec::serial}, parallel = serial;
    parallel.exec = Exec::parallel;

    SimulatorHandle a(mdp, 31), b(mdp, 31);
    const auto ga = estimate_gradient(a, pi, reg, 0.2, nu, serial);
    const auto gb = estimate_gradient(b, pi, reg, 0.2, nu, parallel);
    CHECK(ga.partials.values == gb.partials.values);
    const auto va = estimate_value(a, pi, reg, 0.2, nu, serial);
    const auto vb = estimate_value(b, pi, reg, 0.2, nu, parallel);
    CHECK(va.mean == vb.mean);
    CHECK(va.std_error == vb.std_error);

    SimulatorHandle c(mdp, 32);
    CHECK(estimate_value(c, pi, reg, 0.2, nu, serial).mean != va.mean);
}

TEST_CASE("sampled projected gradient ascent") {
    const TabularMdp mdp = random_mdp(4, 5, 2, 0.8);
    const auto reg = Regularizer::squared_l2();
    const auto nu = uniform_distribution(5);
    const Policy init = Policy::uniform(5, 2);
    SimulatorHandle sim(mdp, 8);
    const SamplingOptions grad_opts{20000, 40, false, Exec::parallel}, sel_opts{5000, 40, false, Exec::parallel};
    const auto res = sampled_pga(sim, reg, 0.1, init, nu, 0.05, 30, grad_opts, sel_opts);
    CHECK(res.trace.rows.size() == 31);
    CHECK(res.selected >= 1);
    CHECK(res.samples == 30 * 20000 + 30 * 5000);
    CHECK(res.trace.rows.back().samples == 30 * 20000);
    CHECK(objective(mdp, res.policy, reg, 0.1, nu) > objective(mdp, init, reg, 0.1, nu));
    CHECK_THROWS_AS(sampled_pga(sim, reg, 0.1, init, nu, 0.0, 3, grad_opts, sel_opts), ArgumentError);
}
