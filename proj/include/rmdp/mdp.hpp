#pragma once

#include "rmdp/config.hpp"
#include "rmdp/regularizer.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rmdp {

using Distribution = std::vector<double>;

/**
 * Finite discounted MDP (S, A, P, r, gamma, mu).
 *
 * Transitions are stored densely, one row of length S per (s, a) pair at
 * index s * A + a. The constructor validates every invariant and throws
 * InvariantError naming the first violated one with its indices.
 */
class TabularMdp {
public:
    TabularMdp(std::size_t num_states, std::size_t num_actions, std::vector<double> reward,
               std::vector<double> transition, double discount, Distribution initial_dist,
               double r_max = 1.0);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    double discount() const { return gamma_; }
    double r_max() const { return r_max_; }
    const Distribution& initial_dist() const { return mu_; }

    double reward(std::size_t s, std::size_t a) const { return reward_[s * A_ + a]; }
    std::span<const double> rewards() const { return reward_; }
    std::span<const double> transition(std::size_t s, std::size_t a) const {
        return {transition_.data() + (s * A_ + a) * S_, S_};
    }
    std::span<const double> transitions() const { return transition_; }

    /// Same model with a different discount or initial distribution.
    TabularMdp with_discount(double discount) const;
    TabularMdp with_initial_dist(Distribution mu) const;

private:
    std::size_t S_;
    std::size_t A_;
    std::vector<double> reward_;
    std::vector<double> transition_;
    double gamma_;
    Distribution mu_;
    double r_max_;
};

/// Row-stochastic S x A table.
class Policy {
public:
    Policy() = default;
    /// Validates rows against tol (entries >= 0, |row sum - 1| <= tol).
    Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs,
           double tol = default_config().policy_row_tol);

    static Policy uniform(std::size_t num_states, std::size_t num_actions);
    static Policy deterministic(std::span<const std::size_t> actions, std::size_t num_actions);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    double operator()(std::size_t s, std::size_t a) const { return probs_[s * A_ + a]; }
    std::span<const double> row(std::size_t s) const { return {probs_.data() + s * A_, A_}; }
    std::span<const double> probs() const { return probs_; }
    double min_prob() const;
    bool is_interior(double floor) const { return min_prob() >= floor; }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::size_t S_ = 0;
    std::size_t A_ = 0;
    std::vector<double> probs_;
};

struct StateValues {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t s) const { return values[s]; }
    double& operator[](std::size_t s) { return values[s]; }
    /// E_{s ~ dist} V(s)
    double expect(std::span<const double> dist) const;
};

struct StateActionValues {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> values;

    double operator()(std::size_t s, std::size_t a) const { return values[s * num_actions + a]; }
    double& operator()(std::size_t s, std::size_t a) { return values[s * num_actions + a]; }
    std::span<const double> row(std::size_t s) const { return {values.data() + s * num_actions, num_actions}; }
};

/// Q_lambda together with V_lambda and the advantage A = Q - V.
struct QResult {
    StateActionValues q;
    StateActionValues advantage;
    StateValues v;
};

struct VisitationDistribution {
    Distribution weights;
    double discount = 0.0;
    std::string source;  ///< free-form description of (policy, start) for traces
};

struct MismatchCoefficients {
    double rho = 1.0;                  ///< max_s mu(s) / nu(s)
    double rho_nu = 1.0;               ///< max over supplied policy pairs of visitation ratios
    double rho_nu_trivial = 1.0;       ///< 1 / ((1 - gamma) min_s nu(s))
    double concentrability = 1.0;      ///< max_s nu(s) / min_s mu(s)
    bool unsupported_nu = false;       ///< nu(s) = 0 where mu(s) > 0
};

double sup_norm(std::span<const double> x);
double sup_distance(std::span<const double> x, std::span<const double> y);
double total_variation(std::span<const double> p, std::span<const double> q);
double max_row_total_variation(const Policy& a, const Policy& b);

Distribution uniform_distribution(std::size_t n);
/// Throws ArgumentError unless dist has length n, entries >= 0 and sums to 1.
void check_distribution(std::span<const double> dist, std::size_t n, const char* what,
                        double tol = default_config().distribution_tol);

/// Row s of P^pi and r^pi for a policy.
std::vector<double> policy_transition_matrix(const TabularMdp& mdp, const Policy& policy);
std::vector<double> policy_reward(const TabularMdp& mdp, const Policy& policy);
/// Omega(pi(.|s)) for every state.
std::vector<double> policy_regularizer(const Regularizer& reg, const Policy& policy);

/**
 * Solves (I - gamma P^pi) V = b for V. Dense LU below the direct-solve limit,
 * fixed-point iteration V <- b + gamma P^pi V beyond it.
 */
std::vector<double> solve_policy_system(const TabularMdp& mdp, std::span<const double> p_pi,
                                        std::span<const double> b,
                                        const NumericConfig& cfg = default_config());

/// V^pi, the unregularized value.
StateValues evaluate_policy(const TabularMdp& mdp, const Policy& policy,
                            const NumericConfig& cfg = default_config());
/// Phi^pi: discounted accumulation of Omega(pi(.|s_t)).
StateValues phi_accumulator(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg,
                            const NumericConfig& cfg = default_config());
/// V_lambda^pi = V^pi - lambda Phi^pi.
StateValues regularized_value(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg,
                              double lambda, const NumericConfig& cfg = default_config());
QResult q_values(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                 const NumericConfig& cfg = default_config());
/// Q(s,a) = r(s,a) + gamma E_{s'} V(s') for an arbitrary V.
StateActionValues backup_q(const TabularMdp& mdp, std::span<const double> v,
                           Exec exec = default_config().exec);
/// (1 - gamma) start (I - gamma P^pi)^{-1}.
VisitationDistribution visitation_distribution(const TabularMdp& mdp, const Policy& policy,
                                               std::span<const double> start,
                                               const NumericConfig& cfg = default_config());
/// J(pi, lambda) = E_{s0 ~ start} V_lambda^pi(s0).
double objective(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                 std::span<const double> start, const NumericConfig& cfg = default_config());
MismatchCoefficients mismatch_diagnostics(const TabularMdp& mdp, std::span<const double> mu,
                                          std::span<const double> nu, std::span<const Policy> policies,
                                          const NumericConfig& cfg = default_config());

} // namespace rmdp
