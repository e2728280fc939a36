#include "rmdp/sampling.hpp"

#include "rmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace rmdp {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t z = master + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cum += probs[i];
        last = i;
        if (u < cum) return i;
    }
    return last;
}

SimulatorHandle::SimulatorHandle(const TabularMdp& mdp, std::uint64_t seed)
    : SimulatorHandle(std::make_shared<const TabularMdp>(mdp), seed, 0) {}

SimulatorHandle::SimulatorHandle(std::shared_ptr<const TabularMdp> mdp, std::uint64_t seed, std::size_t state)
    : mdp_(std::move(mdp)), seed_(seed), rng_(seed), state_(state) {}

SimulatorHandle SimulatorHandle::spawn(std::uint64_t seed) const { return {mdp_, seed, state_}; }

std::size_t SimulatorHandle::reset(std::span<const double> nu) {
    if (nu.size() != mdp_->num_states())
        throw ShapeError("simulator reset: distribution length does not match mdp");
    state_ = sample_index(nu, rng_);
    return state_;
}

SimulatorHandle::Transition SimulatorHandle::step(std::size_t action) {
    if (action >= mdp_->num_actions())
        throw ArgumentError("simulator step: action out of range");
    const double r = mdp_->reward(state_, action);
    state_ = sample_index(mdp_->transition(state_, action), rng_);
    return {state_, r};
}

std::size_t truncation_horizon(double epsilon, double lambda, double c_phi, double gamma) {
    if (gamma == 0.0) return 1;
    if (!(epsilon > 0.0))
        throw ArgumentError("truncation_horizon: epsilon must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ArgumentError("truncation_horizon: gamma must lie in [0, 1)");
    const double w = 1.0 - gamma;
    const double k = std::log(12.0 * (1.0 + lambda * c_phi) / (epsilon * w * w)) / std::log(1.0 / gamma);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(k - 1e-12)));
}

TruncationPlan make_truncation_plan(double epsilon, double lambda, double c_phi, double gamma) {
    return {truncation_horizon(epsilon, lambda, c_phi, gamma), epsilon, lambda, c_phi, gamma};
}

void dump_trajectories(std::ostream& os, std::span<const Trajectory> trajectories) {
    for (const Trajectory& t : trajectories) {
        nlohmann::json j{{"states", t.states}, {"actions", t.actions}, {"rewards", t.rewards}, {"omegas", t.omegas}};
        os << j.dump() << '\n';
    }
}

std::size_t sample_visitation_start(SimulatorHandle& sim, const Policy& policy, std::span<const double> nu,
                                    std::size_t horizon) {
    if (horizon == 0)
        throw ArgumentError("sample_visitation_start: horizon must be positive");
    const double accept = 1.0 - sim.discount();
    std::size_t s = sim.reset(nu);
    for (std::size_t t = 0; t < horizon; ++t) {
        if (uniform01(sim.rng()) < accept) return s;
        s = sim.step(sample_index(policy.row(s), sim.rng())).state;
    }
    return s;
}

Distribution truncated_visitation(const TabularMdp& mdp, const Policy& policy, std::span<const double> nu,
                                  std::size_t horizon) {
    const std::size_t S = mdp.num_states();
    check_distribution(nu, S, "truncated_visitation nu");
    const auto P = policy_transition_matrix(mdp, policy);
    const double g = mdp.discount();
    std::vector<double> x(nu.begin(), nu.end()), next(S), out(S, 0.0);
    double w = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t s = 0; s < S; ++s) out[s] += (1.0 - g) * w * x[s];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t u = 0; u < S; ++u) next[u] += x[s] * P[s * S + u];
        x.swap(next);
        w *= g;
    }
    for (std::size_t s = 0; s < S; ++s) out[s] += w * x[s];
    return out;
}

double q_hat(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda, std::size_t s0,
             std::size_t a0, std::size_t horizon, bool include_initial_regularizer, Trajectory* record) {
    if (horizon == 0)
        throw ArgumentError("q_hat: horizon must be positive");
    if (sim.state() != s0)
        throw ArgumentError("q_hat: simulator is not at s0");
    const double g = sim.discount();
    const double omega0 = reg.value(policy.row(s0));
    if (record) {
        *record = Trajectory{};
        record->states.push_back(s0);
        record->actions.push_back(a0);
        record->omegas.push_back(omega0);
    }
    auto tr = sim.step(a0);
    double total = tr.reward;
    if (include_initial_regularizer) total -= lambda * omega0;
    if (record) record->rewards.push_back(tr.reward);
    double w = 1.0;
    for (std::size_t t = 1; t < horizon; ++t) {
        w *= g;
        const std::size_t s = tr.state;
        const std::size_t a = sample_index(policy.row(s), sim.rng());
        const double omega = reg.value(policy.row(s));
        tr = sim.step(a);
        total += w * (tr.reward - lambda * omega);
        if (record) {
            record->states.push_back(s);
            record->actions.push_back(a);
            record->rewards.push_back(tr.reward);
            record->omegas.push_back(omega);
        }
    }
    return total;
}

StateActionValues truncated_q(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                              std::size_t horizon, bool include_initial_regularizer) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    const auto P = policy_transition_matrix(mdp, policy);
    const auto r = policy_reward(mdp, policy);
    const auto omega = policy_regularizer(reg, policy);
    std::vector<double> w(S, 0.0), next(S);
    for (std::size_t k = 1; k < horizon; ++k) {
        for (std::size_t s = 0; s < S; ++s) {
            double e = 0.0;
            for (std::size_t u = 0; u < S; ++u) e += P[s * S + u] * w[u];
            next[s] = r[s] - lambda * omega[s] + g * e;
        }
        w.swap(next);
    }
    StateActionValues q{S, A, std::vector<double>(S * A)};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = mdp.transition(s, a);
            double e = 0.0;
            for (std::size_t u = 0; u < S; ++u) e += row[u] * w[u];
            q(s, a) = mdp.reward(s, a) + g * e - (include_initial_regularizer ? lambda * omega[s] : 0.0);
        }
    return q;
}

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.subspan(0, h)) + pairwise_sum(x.subspan(h));
}

namespace {

void check_opts(const SamplingOptions& opts, const char* what) {
    if (opts.trajectories == 0)
        throw ArgumentError(std::string(what) + ": number of trajectories must be positive");
    if (opts.horizon == 0)
        throw ArgumentError(std::string(what) + ": horizon must be positive");
}

std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

} // namespace

GradientField estimate_gradient(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda,
                                std::span<const double> nu, const SamplingOptions& opts) {
    check_opts(opts, "estimate_gradient");
    const std::size_t S = sim.num_states(), A = sim.num_actions(), N = opts.trajectories;
    check_distribution(nu, S, "estimate_gradient nu");
    const double scale = static_cast<double>(A) / (1.0 - sim.discount());
    const std::uint64_t batch = sim.next_batch_seed();
    std::vector<std::size_t> cell(N);
    std::vector<double> contrib(N);
#pragma omp parallel for schedule(static) if (opts.exec == Exec::parallel)
    for (std::ptrdiff_t ni = 0; ni < signed_size(N); ++ni) {
        const auto n = static_cast<std::uint64_t>(ni);
        SimulatorHandle child = sim.spawn(derive_seed(batch, n));
        const std::size_t s0 = sample_visitation_start(child, policy, nu, opts.horizon);
        const std::size_t a0 = std::min<std::size_t>(static_cast<std::size_t>(uniform01(child.rng()) * A), A - 1);
        const double q = q_hat(child, policy, reg, lambda, s0, a0, opts.horizon, opts.include_initial_regularizer);
        std::vector<double> grad(A);
        reg.gradient(policy.row(s0), grad);
        cell[n] = s0 * A + a0;
        contrib[n] = scale * (q - lambda * grad[a0]);
    }
    std::vector<std::vector<double>> per_cell(S * A);
    for (std::size_t n = 0; n < N; ++n) per_cell[cell[n]].push_back(contrib[n]);
    GradientField field{{S, A, std::vector<double>(S * A, 0.0)}, Distribution(nu.begin(), nu.end())};
    for (std::size_t i = 0; i < S * A; ++i) field.partials.values[i] = pairwise_sum(per_cell[i]) / static_cast<double>(N);
    return field;
}

ValueEstimate estimate_value(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda,
                             std::span<const double> nu, const SamplingOptions& opts) {
    check_opts(opts, "estimate_value");
    const std::size_t N = opts.trajectories;
    check_distribution(nu, sim.num_states(), "estimate_value nu");
    const std::uint64_t batch = sim.next_batch_seed();
    std::vector<double> vals(N);
#pragma omp parallel for schedule(static) if (opts.exec == Exec::parallel)
    for (std::ptrdiff_t ni = 0; ni < signed_size(N); ++ni) {
        const auto n = static_cast<std::uint64_t>(ni);
        SimulatorHandle child = sim.spawn(derive_seed(batch, n));
        const std::size_t s0 = child.reset(nu);
        const std::size_t a0 = sample_index(policy.row(s0), child.rng());
        vals[n] = q_hat(child, policy, reg, lambda, s0, a0, opts.horizon, opts.include_initial_regularizer) -
                  lambda * reg.value(policy.row(s0));
    }
    ValueEstimate e;
    e.samples = N;
    e.mean = pairwise_sum(vals) / static_cast<double>(N);
    if (N > 1) {
        std::vector<double> dev(N);
        for (std::size_t n = 0; n < N; ++n) dev[n] = (vals[n] - e.mean) * (vals[n] - e.mean);
        e.std_error = std::sqrt(pairwise_sum(dev) / static_cast<double>(N - 1) / static_cast<double>(N));
    }
    return e;
}

Selection select_best_policy(SimulatorHandle& sim, std::span<const Policy> candidates, const Regularizer& reg,
                             double lambda, std::span<const double> nu, const SamplingOptions& opts) {
    if (candidates.empty())
        throw ArgumentError("select_best_policy: no candidates");
    Selection sel;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        sel.estimates.push_back(estimate_value(sim, candidates[i], reg, lambda, nu, opts));
        if (sel.estimates[i].mean > sel.estimates[sel.index].mean) sel.index = i;
    }
    return sel;
}

std::size_t selection_sample_size(double epsilon, double lambda, double c_phi, double gamma, std::size_t count,
                                  double delta) {
    if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || count == 0)
        throw ArgumentError("selection_sample_size: invalid arguments");
    const double a = 1.0 + lambda * c_phi;
    const double n = 2.0 * a * a / (epsilon * epsilon * (1.0 - gamma) * (1.0 - gamma)) *
                     std::log(static_cast<double>(count) / delta);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(n)));
}

SampledPgaResult sampled_pga(SimulatorHandle& sim, const Regularizer& reg, double lambda, const Policy& init,
                             std::span<const double> nu, double eta, std::size_t iterations,
                             const SamplingOptions& gradient_opts, const SamplingOptions& selection_opts) {
    if (!(eta > 0.0))
        throw ArgumentError("sampled_pga: step must be positive");
    SampledPgaResult res{init, init, 0, 0, {}};
    std::vector<Policy> candidates;
    TraceRow row0;
    row0.lambda = lambda;
    row0.min_prob = init.min_prob();
    res.trace.rows.push_back(row0);
    for (std::size_t t = 1; t <= iterations; ++t) {
        const GradientField g = estimate_gradient(sim, res.last_policy, reg, lambda, nu, gradient_opts);
        res.last_policy = pga_step_with(res.last_policy, g, eta, reg.floor(), gradient_opts.exec);
        res.samples += gradient_opts.trajectories;
        candidates.push_back(res.last_policy);
        TraceRow row;
        row.iteration = t;
        row.lambda = lambda;
        row.grad_norm = g.tangent_norm();
        row.min_prob = res.last_policy.min_prob();
        row.samples = res.samples;
        res.trace.rows.push_back(row);
    }
    if (!candidates.empty()) {
        const Selection sel = select_best_policy(sim, candidates, reg, lambda, nu, selection_opts);
        res.selected = sel.index + 1;
        res.policy = candidates[sel.index];
        res.samples += candidates.size() * selection_opts.trajectories;
    }
    res.trace.status = SolverStatus::completed;
    return res;
}

} // namespace rmdp
