#include "support.hpp"

#include "rmdp/adapt_reduce.hpp"
#include "rmdp/bellman.hpp"
#include "rmdp/errors.hpp"
#include "rmdp/grad.hpp"

#include <doctest.h>

using namespace rmdp;
using namespace testing;

namespace {

double vstar_mu(const TabularMdp& mdp) {
    return soft_optimal_oracle(mdp, Regularizer::constant(0.0), 0.0).values.expect(mdp.initial_dist());
}

SubSolverBinding rmpi_until_certified() {
    SubSolverBinding b;
    b.solver = SolverId::rmpi;
    b.budget = BudgetPolicy::until_certified;
    b.iterations = 100;
    return b;
}

} // namespace

TEST_CASE("stopping rule helpers") {
    const StoppingRule r{};
    CHECK(prop1_certify(1.0, 0.25, r));
    CHECK_FALSE(prop1_certify(1.0, 0.26, r));
    CHECK(prop1_certify(0.0, 0.0, StoppingRule{PropKind::prop1, 0.3, 0.25}));
    CHECK(prop1_certify(1.0, 0.3, StoppingRule{PropKind::prop1, 0.05, 0.25}));
    CHECK_THROWS_AS(prop1_certify(-1.0, 0.0, r), ArgumentError);
    CHECK_THROWS_AS(prop1_certify(1.0, -0.1, r), ArgumentError);
    CHECK_THROWS_AS((StoppingRule{PropKind::prop1, -1.0, 0.25}.validate()), ArgumentError);
    CHECK_THROWS_AS((StoppingRule{PropKind::prop1, 0.0, 1.0}.validate()), ArgumentError);

    CHECK(prop2_target(1.0, std::log(4.0), 0.9, 0) == doctest::Approx(10.0 * std::log(4.0)));
    CHECK(prop2_target(1.0, std::log(4.0), 0.9, 0) == doctest::Approx(13.86).epsilon(1e-3));
    CHECK(prop2_target(2.0, 1.0, 0.5, 3) == 0.5);
    for (std::size_t t = 0; t < 30; ++t)
        CHECK(prop2_target(1.3, 0.7, 0.9, t + 1) == prop2_target(1.3, 0.7, 0.9, t) / 2.0);

    CHECK(pga_epoch_budget(10, 2.0, 100.0, 1.0, 1.0, 0.9, 0) == 51200);
    CHECK(pga_epoch_budget(10, 2.0, 100.0, 1.0, 1.0, 0.9, 1) == 102400);
    CHECK_THROWS_AS(pga_epoch_budget(10, 0.0, 100.0, 1.0, 1.0, 0.9, 0), ArgumentError);

    CHECK(rmpi_epoch_budget(1.0, 0.9) == static_cast<std::size_t>(std::ceil(std::log(80.0) / std::log(1.0 / 0.9))));
    CHECK(rmpi_epoch_budget(1.0, 0.0) == 1);

    CHECK(theorem1_bound(1.0, 1.0, 1.0, 0.5, 0.0, 4) == 0.75390625);
    CHECK(theorem1_bound(2.0, 1.0, 1.0, 0.5, 0.0, 0) == doctest::Approx(2.0 + 12.0));
    CHECK(theorem1_bound(2.0, 1.0, 1.0, 0.5, 0.3, 2000) == doctest::Approx(0.4));
    CHECK(theorem2_bound(1.0, 1.0, 0.5, 0.1, 4) == doctest::Approx(0.75 + 0.1));
}

TEST_CASE("time formula totals") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::squared_l2();
    const double c = reg.bounds(3).c_phi, lambda0 = 1.0, rho = 3.0;
    const auto s0 = smoothness_constant(mdp, reg, 0.0);
    const double k = 128.0 * 8.0 * rho * rho * 0.1 / (lambda0 * c);
    for (std::size_t T : {1u, 5u, 12u}) {
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t)
            total += static_cast<double>(pga_epoch_budget(8, rho, smoothness_constant(mdp, reg, halving_lambda(lambda0, t)).l_lambda,
                                                          lambda0, c, 0.9, t));
        const double closed = k * (s0.unregularized * (std::ldexp(1.0, static_cast<int>(T)) - 1.0) +
                                   lambda0 * s0.per_lambda * static_cast<double>(T));
        CHECK(total >= closed);
        CHECK(total <= closed + static_cast<double>(T));
    }
}

TEST_CASE("schedule exactness and the empty run") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::shifted_entropy();
    const Policy init = Policy::uniform(8, 3);

    const auto none = adapt_reduce(mdp, reg, 1.0, init, rmpi_until_certified(), {}, 0);
    CHECK(none.report.epochs.empty());
    CHECK(none.policy.probs().size() == init.probs().size());
    CHECK(std::equal(none.policy.probs().begin(), none.policy.probs().end(), init.probs().begin()));

    for (std::size_t t = 0; t < 60; ++t) CHECK(halving_lambda(0.7, t) == std::ldexp(0.7, -static_cast<int>(t)));
    SubSolverBinding b;
    b.iterations = 1;
    const auto res = adapt_reduce(mdp, reg, 0.7, init, b, {}, 25);
    REQUIRE(res.report.epochs.size() == 25);
    for (std::size_t t = 0; t < 25; ++t) {
        CHECK(res.report.epochs[t].epoch == t);
        CHECK(res.report.epochs[t].lambda == std::ldexp(0.7, -static_cast<int>(t)));
    }
    CHECK(res.report.bound >= 0.0);
}

TEST_CASE("rmpi sub-solver meets the prop-I bound") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::shifted_entropy();
    const double c = reg.bounds(3).c_phi;
    const std::size_t T = 20;
    const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), rmpi_until_certified(), {}, T);
    const auto& rep = res.report;
    CHECK(rep.trace.status == SolverStatus::certified);
    CHECK(rep.epsilon_hat_measured == 0.0);
    CHECK(rep.final_gap <= rep.d0 / std::pow(4.0, T) + 6.0 * c / (0.1 * std::ldexp(1.0, T)));
    CHECK(rep.final_gap <= rep.bound);
    CHECK(rep.final_gap >= -1e-9);
    CHECK(std::abs(rep.final_gap - (vstar_mu(mdp) - evaluate_policy(mdp, res.policy).expect(mdp.initial_dist()))) < 1e-12);

    for (std::size_t t = 1; t < rep.epochs.size(); ++t) {
        const double d_prev = rep.epochs[t - 1].gap_before, d = rep.epochs[t].gap_before;
        CHECK(d <= 0.25 * d_prev + std::ldexp(1.0, 1 - static_cast<int>(t)) * c / 0.1 + 1e-9);
        CHECK(rep.epochs[t].status == EpochStatus::certified);
    }
    std::size_t sum = 0;
    for (const auto& e : rep.epochs) sum += e.iterations;
    CHECK(sum == rep.total_iterations);
    CHECK(rep.trace.rows.size() == rep.total_iterations);
}

TEST_CASE("epoch count for a target accuracy") {
    const TabularMdp mdp = random_mdp(11);
    const auto reg = Regularizer::shifted_entropy();
    const double c = reg.bounds(3).c_phi;
    for (double eps : {0.1, 0.01, 0.001}) {
        const auto T = static_cast<std::size_t>(std::ceil(std::log2(6.0 * c / (eps * 0.1)))) + 2;
        const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), rmpi_until_certified(), {}, T);
        CHECK(res.report.final_gap <= eps);
    }
}

TEST_CASE("pga sub-solver meets the prop-II bound") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::squared_l2();
    const double c = reg.bounds(3).c_phi;
    SubSolverBinding b;
    b.solver = SolverId::pga;
    b.budget = BudgetPolicy::until_certified;
    b.iterations = 20000;
    const StoppingRule rule{PropKind::prop2, 0.0, 0.25};
    const std::size_t T = 10;
    const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), b, rule, T);
    const auto& rep = res.report;
    CHECK(rep.epochs.size() == T);
    for (std::size_t t = 0; t < T; ++t) CHECK(rep.epochs[t].target == doctest::Approx(prop2_target(1.0, c, 0.9, t)));
    CHECK(rep.bound == doctest::Approx(6.0 * c / (0.1 * 1024.0) + std::max(0.0, rep.epsilon_hat_measured)));
    CHECK(rep.final_gap <= rep.bound);
    CHECK(rep.final_gap >= -1e-9);
}

TEST_CASE("uncertified epochs do not stop the loop") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::squared_l2();
    SubSolverBinding b;
    b.solver = SolverId::pga;
    b.iterations = 1;
    b.step = 1e-6;
    const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), b, {}, 6);
    REQUIRE(res.report.epochs.size() == 6);
    std::size_t uncertified = 0;
    for (const auto& e : res.report.epochs) uncertified += e.status == EpochStatus::uncertified;
    CHECK(uncertified > 0);
    CHECK(res.report.trace.status == SolverStatus::completed);
    CHECK(res.report.epsilon_hat_measured > 0.0);
    CHECK(res.report.bound >= theorem1_bound(res.report.d0, 1.0, reg.bounds(3).c_phi, 0.9,
                                             res.report.epsilon_hat_measured, 6) - 1e-12);
}

TEST_CASE("theoretical budget mode") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::shifted_entropy();
    SubSolverBinding b;
    b.budget = BudgetPolicy::time_formula;
    b.certification = Certification::theoretical_budget;
    const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), b, {}, 5);
    REQUIRE(res.report.epochs.size() == 5);
    for (const auto& e : res.report.epochs) {
        CHECK(e.status == EpochStatus::assumed);
        CHECK(std::isnan(e.gap_before));
        CHECK(e.iterations == rmpi_epoch_budget(1.0, 0.9));
    }
    CHECK(std::isnan(res.report.final_gap));

    SubSolverBinding p;
    p.solver = SolverId::pga;
    p.budget = BudgetPolicy::time_formula;
    p.certification = Certification::theoretical_budget;
    p.budget_scale = 1e-9;
    p.rho_nu = 2.0;
    const auto pr = adapt_reduce(mdp, Regularizer::squared_l2(), 1.0, Policy::uniform(8, 3), p, {}, 3);
    for (std::size_t t = 0; t < 3; ++t) {
        const auto full = pga_epoch_budget(8, 2.0, smoothness_constant(mdp, Regularizer::squared_l2(), halving_lambda(1.0, t)).l_lambda,
                                           1.0, Regularizer::squared_l2().bounds(3).c_phi, 0.9, t);
        CHECK(pr.report.epochs[t].iterations ==
              std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(1e-9 * static_cast<double>(full)))));
    }
}

TEST_CASE("observer and warm start") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::shifted_entropy();
    SubSolverBinding b;
    b.iterations = 2;
    std::vector<IterationEvent> seen;
    std::vector<Policy> policies;
    ReductionOptions opts;
    opts.observer = [&](const IterationEvent& e) {
        seen.push_back(e);
        policies.push_back(e.policy);
        return e.total < 5;
    };
    const auto res = adapt_reduce(mdp, reg, 1.0, Policy::uniform(8, 3), b, {}, 10, opts);
    REQUIRE(!seen.empty());
    CHECK(seen.front().inner == 0);
    CHECK(seen.front().total == 0);
    CHECK(seen.back().total == 5);
    CHECK(res.report.epochs.size() == 3);
    CHECK(res.report.total_iterations == 5);
    for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i].total == i);
    CHECK(policies.back().probs()[0] == res.policy.probs()[0]);
}

TEST_CASE("argument checks") {
    const TabularMdp mdp = random_mdp(7);
    const auto reg = Regularizer::squared_l2();
    const Policy init = Policy::uniform(8, 3);
    CHECK_THROWS_AS(adapt_reduce(mdp, reg, 0.0, init, {}, {}, 3), ArgumentError);
    SubSolverBinding soft;
    soft.solver = SolverId::softmax_pg;
    CHECK_THROWS_AS(adapt_reduce(mdp, reg, 1.0, init, soft, {}, 3), UnsupportedError);
    SubSolverBinding bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(adapt_reduce(mdp, reg, 1.0, init, bad, {}, 3), ArgumentError);
    SubSolverBinding until;
    until.budget = BudgetPolicy::until_certified;
    until.certification = Certification::theoretical_budget;
    CHECK_THROWS_AS(adapt_reduce(mdp, reg, 1.0, init, until, {}, 3), ArgumentError);
    CHECK_THROWS_AS(adapt_reduce(mdp, reg, 1.0, Policy::uniform(4, 3), {}, {}, 3), ShapeError);
    const LambdaSchedule broken = [](double, std::size_t) { return -1.0; };
    CHECK_THROWS_AS(adapt_reduce_scheduled(mdp, reg, 1.0, broken, init, {}, {}, 3), ArgumentError);
    CHECK_THROWS_AS(parse_solver("newton"), ConfigError);
    CHECK(parse_solver(to_string(SolverId::mdpo)) == SolverId::mdpo);
    CHECK(parse_budget(to_string(BudgetPolicy::time_formula)) == BudgetPolicy::time_formula);
    CHECK(parse_prop(to_string(PropKind::prop2)) == PropKind::prop2);
}
