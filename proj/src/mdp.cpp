#include "rmdp/mdp.hpp"

#include "rmdp/errors.hpp"
#include "rmdp/kernels.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rmdp {

namespace {

std::string at(std::size_t s, std::size_t a) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ")";
    return os.str();
}

void check_shapes(const TabularMdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw ShapeError("policy shape " + std::to_string(policy.num_states()) + "x" +
                         std::to_string(policy.num_actions()) + " does not match mdp " +
                         std::to_string(mdp.num_states()) + "x" + std::to_string(mdp.num_actions()));
}

} // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, std::vector<double> reward,
                       std::vector<double> transition, double discount, Distribution initial_dist, double r_max)
    : S_(num_states), A_(num_actions), reward_(std::move(reward)), transition_(std::move(transition)),
      gamma_(discount), mu_(std::move(initial_dist)), r_max_(r_max) {
    const auto& cfg = default_config();
    if (S_ == 0 || A_ == 0)
        throw InvariantError("mdp: num_states and num_actions must be positive");
    if (reward_.size() != S_ * A_)
        throw ShapeError("mdp: reward has " + std::to_string(reward_.size()) + " entries, expected " +
                         std::to_string(S_ * A_));
    if (transition_.size() != S_ * A_ * S_)
        throw ShapeError("mdp: transition has " + std::to_string(transition_.size()) + " entries, expected " +
                         std::to_string(S_ * A_ * S_));
    if (!(gamma_ >= 0.0 && gamma_ < 1.0))
        throw InvariantError("mdp: discount must lie in [0, 1)");
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_))
        throw InvariantError("mdp: r_max must be positive and finite");
    for (std::size_t s = 0; s < S_; ++s) {
        for (std::size_t a = 0; a < A_; ++a) {
            const double r = reward_[s * A_ + a];
            if (!(r >= 0.0 && r <= r_max_))
                throw InvariantError("mdp: reward at " + at(s, a) + " is outside [0, r_max]");
            double sum = 0.0;
            for (std::size_t t = 0; t < S_; ++t) {
                const double p = transition_[(s * A_ + a) * S_ + t];
                if (!(p >= 0.0))
                    throw InvariantError("mdp: negative transition probability at " + at(s, a) + " -> " +
                                         std::to_string(t));
                sum += p;
            }
            if (std::abs(sum - 1.0) > cfg.transition_row_tol)
                throw InvariantError("mdp: transition row " + at(s, a) + " sums to " + std::to_string(sum));
        }
    }
    if (mu_.size() != S_)
        throw ShapeError("mdp: mu has " + std::to_string(mu_.size()) + " entries, expected " + std::to_string(S_));
    double sum = 0.0;
    for (std::size_t s = 0; s < S_; ++s) {
        if (!(mu_[s] >= 0.0))
            throw InvariantError("mdp: mu(" + std::to_string(s) + ") is negative");
        sum += mu_[s];
    }
    if (std::abs(sum - 1.0) > cfg.distribution_tol)
        throw InvariantError("mdp: mu sums to " + std::to_string(sum));
}

TabularMdp TabularMdp::with_discount(double discount) const {
    return {S_, A_, reward_, transition_, discount, mu_, r_max_};
}

TabularMdp TabularMdp::with_initial_dist(Distribution mu) const {
    return {S_, A_, reward_, transition_, gamma_, std::move(mu), r_max_};
}

Policy::Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs, double tol)
    : S_(num_states), A_(num_actions), probs_(std::move(probs)) {
    if (S_ == 0 || A_ == 0)
        throw ShapeError("policy: empty shape");
    if (probs_.size() != S_ * A_)
        throw ShapeError("policy: expected " + std::to_string(S_ * A_) + " entries");
    for (std::size_t s = 0; s < S_; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < A_; ++a) {
            const double p = probs_[s * A_ + a];
            if (!(p >= 0.0))
                throw InvariantError("policy: negative entry at " + at(s, a));
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol)
            throw InvariantError("policy: row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
}

Policy Policy::uniform(std::size_t num_states, std::size_t num_actions) {
    return {num_states, num_actions,
            std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions))};
}

Policy Policy::deterministic(std::span<const std::size_t> actions, std::size_t num_actions) {
    std::vector<double> p(actions.size() * num_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= num_actions)
            throw ShapeError("policy: action index out of range");
        p[s * num_actions + actions[s]] = 1.0;
    }
    return {actions.size(), num_actions, std::move(p)};
}

double Policy::min_prob() const { return *std::min_element(probs_.begin(), probs_.end()); }

double StateValues::expect(std::span<const double> dist) const {
    if (dist.size() != values.size())
        throw ShapeError("expectation: distribution length does not match values");
    double v = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) v += dist[s] * values[s];
    return v;
}

double sup_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

double sup_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ShapeError("sup_distance: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw ShapeError("total_variation: length mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return 0.5 * d;
}

double max_row_total_variation(const Policy& a, const Policy& b) {
    if (a.num_states() != b.num_states() || a.num_actions() != b.num_actions())
        throw ShapeError("max_row_total_variation: shape mismatch");
    double m = 0.0;
    for (std::size_t s = 0; s < a.num_states(); ++s) m = std::max(m, total_variation(a.row(s), b.row(s)));
    return m;
}

Distribution uniform_distribution(std::size_t n) { return Distribution(n, 1.0 / static_cast<double>(n)); }

void check_distribution(std::span<const double> dist, std::size_t n, const char* what, double tol) {
    if (dist.size() != n)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                         std::to_string(dist.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(dist[i] >= 0.0))
            throw ArgumentError(std::string(what) + ": entry " + std::to_string(i) + " is negative");
        sum += dist[i];
    }
    if (std::abs(sum - 1.0) > tol)
        throw ArgumentError(std::string(what) + ": sums to " + std::to_string(sum));
}

std::vector<double> policy_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
    check_shapes(mdp, policy);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> m(S * S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double w = policy(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.transition(s, a);
            for (std::size_t t = 0; t < S; ++t) m[s * S + t] += w * row[t];
        }
    return m;
}

std::vector<double> policy_reward(const TabularMdp& mdp, const Policy& policy) {
    check_shapes(mdp, policy);
    std::vector<double> r(mdp.num_states(), 0.0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) r[s] += policy(s, a) * mdp.reward(s, a);
    return r;
}

std::vector<double> policy_regularizer(const Regularizer& reg, const Policy& policy) {
    std::vector<double> w(policy.num_states());
    for (std::size_t s = 0; s < policy.num_states(); ++s) w[s] = reg.value(policy.row(s));
    return w;
}

std::vector<double> solve_policy_system(const TabularMdp& mdp, std::span<const double> p_pi,
                                        std::span<const double> b, const NumericConfig& cfg) {
    const std::size_t S = mdp.num_states();
    const double g = mdp.discount();
    if (p_pi.size() != S * S || b.size() != S)
        throw ShapeError("solve_policy_system: shape mismatch");
    if (S <= cfg.direct_solve_limit) {
        using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const Mat> P(p_pi.data(), static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
        Mat M = Mat::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)) - g * P;
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(S));
        Eigen::VectorXd x = M.partialPivLu().solve(rhs);
        return {x.data(), x.data() + S};
    }
    std::vector<double> v(b.begin(), b.end()), next(S);
    for (std::size_t it = 0; it < cfg.max_eval_iterations; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            for (std::size_t t = 0; t < S; ++t) acc += p_pi[s * S + t] * v[t];
            next[s] = b[s] + g * acc;
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff <= cfg.eval_residual) break;
    }
    return v;
}

StateValues evaluate_policy(const TabularMdp& mdp, const Policy& policy, const NumericConfig& cfg) {
    const auto P = policy_transition_matrix(mdp, policy);
    const auto r = policy_reward(mdp, policy);
    return {solve_policy_system(mdp, P, r, cfg)};
}

StateValues phi_accumulator(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg,
                            const NumericConfig& cfg) {
    const auto P = policy_transition_matrix(mdp, policy);
    const auto w = policy_regularizer(reg, policy);
    return {solve_policy_system(mdp, P, w, cfg)};
}

StateValues regularized_value(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                              const NumericConfig& cfg) {
    if (lambda < 0.0)
        throw ArgumentError("regularized_value: negative lambda");
    StateValues v = evaluate_policy(mdp, policy, cfg);
    if (lambda == 0.0) return v;
    const StateValues phi = phi_accumulator(mdp, policy, reg, cfg);
    for (std::size_t s = 0; s < v.size(); ++s) v[s] -= lambda * phi[s];
    return v;
}

StateActionValues backup_q(const TabularMdp& mdp, std::span<const double> v, Exec exec) {
    if (v.size() != mdp.num_states())
        throw ShapeError("backup_q: value length does not match mdp");
    StateActionValues q{mdp.num_states(), mdp.num_actions(),
                        std::vector<double>(mdp.num_states() * mdp.num_actions())};
    kernels::q_backup(exec, mdp, v, q.values);
    return q;
}

QResult q_values(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                 const NumericConfig& cfg) {
    StateValues v = regularized_value(mdp, policy, reg, lambda, cfg);
    StateActionValues q = backup_q(mdp, v.values, cfg.exec);
    StateActionValues adv = q;
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) adv(s, a) -= v[s];
    return {std::move(q), std::move(adv), std::move(v)};
}

VisitationDistribution visitation_distribution(const TabularMdp& mdp, const Policy& policy,
                                               std::span<const double> start, const NumericConfig& cfg) {
    check_shapes(mdp, policy);
    check_distribution(start, mdp.num_states(), "visitation_distribution start");
    const std::size_t S = mdp.num_states();
    const double g = mdp.discount();
    const auto P = policy_transition_matrix(mdp, policy);
    // d^T = (1 - g) start^T (I - g P)^{-1}, i.e. (I - g P^T) d = (1 - g) start.
    std::vector<double> pt(S * S);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) pt[i * S + j] = P[j * S + i];
    std::vector<double> b(start.begin(), start.end());
    for (double& x : b) x *= (1.0 - g);
    auto d = solve_policy_system(mdp, pt, b, cfg);
    for (double& x : d) x = std::max(x, 0.0);
    return {std::move(d), g, "policy visitation"};
}

double objective(const TabularMdp& mdp, const Policy& policy, const Regularizer& reg, double lambda,
                 std::span<const double> start, const NumericConfig& cfg) {
    check_distribution(start, mdp.num_states(), "objective start");
    return regularized_value(mdp, policy, reg, lambda, cfg).expect(start);
}

MismatchCoefficients mismatch_diagnostics(const TabularMdp& mdp, std::span<const double> mu,
                                          std::span<const double> nu, std::span<const Policy> policies,
                                          const NumericConfig& cfg) {
    const std::size_t S = mdp.num_states();
    check_distribution(mu, S, "mismatch mu");
    check_distribution(nu, S, "mismatch nu");
    const double inf = std::numeric_limits<double>::infinity();
    MismatchCoefficients m;
    m.rho = 0.0;
    double nu_min = inf, nu_max = 0.0, mu_min = inf;
    for (std::size_t s = 0; s < S; ++s) {
        if (nu[s] > 0.0) {
            m.rho = std::max(m.rho, mu[s] / nu[s]);
        } else if (mu[s] > 0.0) {
            m.rho = inf;
            m.unsupported_nu = true;
        }
        nu_min = std::min(nu_min, nu[s]);
        nu_max = std::max(nu_max, nu[s]);
        mu_min = std::min(mu_min, mu[s]);
    }
    const double g = mdp.discount();
    m.rho_nu_trivial = nu_min > 0.0 ? 1.0 / ((1.0 - g) * nu_min) : inf;
    m.concentrability = mu_min > 0.0 ? std::max(1.0, nu_max / mu_min) : inf;
    std::vector<Distribution> ds;
    for (const Policy& p : policies) ds.push_back(visitation_distribution(mdp, p, nu, cfg).weights);
    m.rho_nu = 1.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.size(); ++j)
            for (std::size_t s = 0; s < S; ++s) {
                if (ds[i][s] == 0.0) continue;
                m.rho_nu = std::max(m.rho_nu, ds[j][s] > 0.0 ? ds[i][s] / ds[j][s] : inf);
            }
    return m;
}

} // namespace rmdp
