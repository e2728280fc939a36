#pragma once

#include "rmdp/grad.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace rmdp {

/// splitmix64 finalizer applied to master + counter * golden gamma.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);
/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);
/// Inverse-CDF draw from a probability vector.
std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng);

/**
 * nu-restart access to a tabular model: reset(nu) and step(a) only.
 * Each handle owns one random stream; fork(k) derives an independent child
 * stream so batches of trajectories can run in any order or in parallel.
 */
class SimulatorHandle {
public:
    struct Transition {
        std::size_t state;
        double reward;
    };

    SimulatorHandle(const TabularMdp& mdp, std::uint64_t seed);

    std::size_t reset(std::span<const double> nu);
    Transition step(std::size_t action);

    std::size_t state() const { return state_; }
    std::size_t num_states() const { return mdp_->num_states(); }
    std::size_t num_actions() const { return mdp_->num_actions(); }
    double discount() const { return mdp_->discount(); }
    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& rng() { return rng_; }

    /// Child handle on stream derive_seed(seed, k), positioned at the parent's state.
    SimulatorHandle fork(std::uint64_t k) const { return spawn(derive_seed(seed_, k)); }
    /// Handle on the same model with an explicit seed, positioned at the parent's state.
    SimulatorHandle spawn(std::uint64_t seed) const;
    /// Seed for the next batch; advances the batch counter.
    std::uint64_t next_batch_seed() { return derive_seed(seed_ ^ 0xa5a5a5a5a5a5a5a5ULL, batch_++); }

private:
    SimulatorHandle(std::shared_ptr<const TabularMdp> mdp, std::uint64_t seed, std::size_t state);

    std::shared_ptr<const TabularMdp> mdp_;
    std::uint64_t seed_;
    std::uint64_t batch_ = 0;
    std::mt19937_64 rng_;
    std::size_t state_ = 0;
};

struct TruncationPlan {
    std::size_t horizon = 1;
    double epsilon = 0.0;
    double lambda = 0.0;
    double c_phi = 0.0;
    double gamma = 0.0;
};

/// K = ceil(log(12 (1 + lambda C) / (eps (1 - gamma)^2)) / log(1 / gamma)); 1 when gamma = 0.
std::size_t truncation_horizon(double epsilon, double lambda, double c_phi, double gamma);
TruncationPlan make_truncation_plan(double epsilon, double lambda, double c_phi, double gamma);

struct Trajectory {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;
    std::vector<double> omegas;  ///< Omega(pi(.|s_t))
};

/// Writes one JSON object per line: {"states": [...], "actions": [...], "rewards": [...], "omegas": [...]}.
void dump_trajectories(std::ostream& os, std::span<const Trajectory> trajectories);

/// s ~ nu, then accept with probability 1 - gamma or step under pi; forced acceptance at step K.
std::size_t sample_visitation_start(SimulatorHandle& sim, const Policy& policy, std::span<const double> nu,
                                    std::size_t horizon);

/// Analytic marginal of sample_visitation_start:
/// (1-gamma) sum_{t<K} gamma^t nu P_pi^t + gamma^K nu P_pi^K.
Distribution truncated_visitation(const TabularMdp& mdp, const Policy& policy, std::span<const double> nu,
                                  std::size_t horizon);

/**
 * Q-hat(s0, a0) = R(s0, a0) + sum_{t=1}^{K-1} gamma^t (R(s_t, a_t) - lambda Omega(pi(.|s_t))).
 * The simulator must currently sit at s0. With include_initial_regularizer
 * the t = 0 term also subtracts lambda Omega(pi(.|s0)).
 */
double q_hat(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda, std::size_t s0,
             std::size_t a0, std::size_t horizon, bool include_initial_regularizer = false,
             Trajectory* record = nullptr);

/// Q-bar: expectation of q_hat computed by the K-step recursion on the model.
StateActionValues truncated_q(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                              std::size_t horizon, bool include_initial_regularizer = false);

struct SamplingOptions {
    std::size_t trajectories = 1000;  ///< N
    std::size_t horizon = 50;          ///< K
    bool include_initial_regularizer = false;
    Exec exec = default_config().exec;

    friend bool operator==(const SamplingOptions&, const SamplingOptions&) = default;
};

/// |A| / (1 - gamma) mean_n [Q-hat - lambda grad omega] 1{s_0n = s, a_0n = a}, a_0n uniform.
GradientField estimate_gradient(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda,
                                std::span<const double> nu, const SamplingOptions& opts);

struct ValueEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// mean_n Q-hat(s_0n, a_0n) - lambda Omega(pi(.|s_0n)) with s_0n ~ nu, a_0n ~ pi.
ValueEstimate estimate_value(SimulatorHandle& sim, const Policy& policy, const Regularizer& reg, double lambda,
                             std::span<const double> nu, const SamplingOptions& opts);

struct Selection {
    std::size_t index = 0;
    std::vector<ValueEstimate> estimates;
};

/// argmax of fresh value estimates; ties go to the lowest index.
Selection select_best_policy(SimulatorHandle& sim, std::span<const Policy> candidates, const Regularizer& reg,
                             double lambda, std::span<const double> nu, const SamplingOptions& opts);

/// N = 2 (1 + lambda C)^2 / (eps^2 (1 - gamma)^2) log(count / delta)
std::size_t selection_sample_size(double epsilon, double lambda, double c_phi, double gamma, std::size_t count,
                                  double delta);

/// Sum in index order using pairwise splitting; result does not depend on thread count.
double pairwise_sum(std::span<const double> x);

struct SampledPgaResult {
    Policy policy;       ///< selected by select_best_policy
    Policy last_policy;
    std::size_t selected = 0;
    std::size_t samples = 0;
    SolverTrace trace;
};

/// Projected ascent driven by estimate_gradient; returns the best iterate by estimated value.
SampledPgaResult sampled_pga(SimulatorHandle& sim, const Regularizer& reg, double lambda, const Policy& init,
                             std::span<const double> nu, double eta, std::size_t iterations,
                             const SamplingOptions& gradient_opts, const SamplingOptions& selection_opts);

} // namespace rmdp
