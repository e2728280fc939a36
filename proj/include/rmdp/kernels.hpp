#pragma once

#include "rmdp/config.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"

#include <span>

// Data-parallel inner loops. Every kernel exists twice: serial:: is the
// reference implementation, omp:: splits the state loop across OpenMP
// threads. Iterations are independent, so both produce bit-identical output.

namespace rmdp::kernels {

namespace serial {
/// q(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) v(s')
void q_backup(const TabularMdp& mdp, std::span<const double> v, std::span<double> q);
/// out(s) = sum_a pi(a|s) q(s,a) - lambda * omega(s), with q from v.
void policy_backup(const TabularMdp& mdp, const Policy& policy, std::span<const double> omega,
                   double lambda, std::span<const double> v, std::span<double> out);
/// Row-wise local_greedy over an S x A table q; returns the largest inner iteration count.
std::size_t greedy_rows(const Regularizer& reg, std::span<const double> q, std::size_t num_actions,
                        double lambda, std::span<double> probs, std::span<double> values, double tol,
                        std::size_t max_iterations);
/// Row-wise Euclidean projection onto {p >= lower, sum p = 1}.
void project_rows(std::span<const double> y, std::size_t num_actions, double lower, std::span<double> out);
} // namespace serial

namespace omp {
void q_backup(const TabularMdp& mdp, std::span<const double> v, std::span<double> q);
void policy_backup(const TabularMdp& mdp, const Policy& policy, std::span<const double> omega,
                   double lambda, std::span<const double> v, std::span<double> out);
std::size_t greedy_rows(const Regularizer& reg, std::span<const double> q, std::size_t num_actions,
                        double lambda, std::span<double> probs, std::span<double> values, double tol,
                        std::size_t max_iterations);
void project_rows(std::span<const double> y, std::size_t num_actions, double lower, std::span<double> out);
} // namespace omp

inline void q_backup(Exec exec, const TabularMdp& mdp, std::span<const double> v, std::span<double> q) {
    exec == Exec::parallel ? omp::q_backup(mdp, v, q) : serial::q_backup(mdp, v, q);
}

inline void policy_backup(Exec exec, const TabularMdp& mdp, const Policy& policy,
                          std::span<const double> omega, double lambda, std::span<const double> v,
                          std::span<double> out) {
    exec == Exec::parallel ? omp::policy_backup(mdp, policy, omega, lambda, v, out)
                           : serial::policy_backup(mdp, policy, omega, lambda, v, out);
}

inline std::size_t greedy_rows(Exec exec, const Regularizer& reg, std::span<const double> q,
                               std::size_t num_actions, double lambda, std::span<double> probs,
                               std::span<double> values, double tol, std::size_t max_iterations) {
    return exec == Exec::parallel
               ? omp::greedy_rows(reg, q, num_actions, lambda, probs, values, tol, max_iterations)
               : serial::greedy_rows(reg, q, num_actions, lambda, probs, values, tol, max_iterations);
}

inline void project_rows(Exec exec, std::span<const double> y, std::size_t num_actions, double lower,
                         std::span<double> out) {
    exec == Exec::parallel ? omp::project_rows(y, num_actions, lower, out)
                           : serial::project_rows(y, num_actions, lower, out);
}

} // namespace rmdp::kernels
