#pragma once

#include <span>
#include <string>
#include <vector>

namespace rmdp {

enum class RegKind { shifted_entropy, raw_entropy, squared_l2, tsallis, constant };
enum class SignConvention { nonnegative, nonpositive };
enum class ConvexityNorm { l1, l2 };

/// Strong-convexity modulus together with the norm it is stated in.
struct StrongConvexity {
    double modulus;
    ConvexityNorm norm;
};

/// Uniform bounds on |omega|, ||grad omega||_inf and the Hessian operator norm
/// over the floored simplex.
struct BoundConstants {
    double c_phi;
    double c_phi_1;
    double c_phi_2;
};

/**
 * A convex function omega on the action simplex, applied state-wise to a policy.
 *
 * Families:
 *  - shifted entropy   omega(p) = log|A| + sum p log p            (in [0, log|A|])
 *  - raw entropy       omega(p) = sum p log p                     (in [-log|A|, 0])
 *  - squared l2        omega(p) = 1/2 ||p||^2
 *  - tsallis(q)        omega(p) = (sum p^q - |A|^(1-q)) / (q - 1), q in (1, 2]
 *  - constant(c)       omega(p) = c; degenerate, used for diagnostics only
 *
 * Entropy values use 0 log 0 = 0 and need no clamping. Gradients of the
 * entropy and tsallis (q < 2) families are evaluated on the floored simplex:
 * entries below the floor are raised to it and the row renormalized.
 */
class Regularizer {
public:
    static Regularizer shifted_entropy(double floor = 1e-6);
    static Regularizer raw_entropy(double floor = 1e-6);
    static Regularizer squared_l2(double floor = 1e-6);
    static Regularizer tsallis(double q = 2.0, double floor = 1e-6);
    static Regularizer constant(double c, double floor = 1e-6);

    RegKind kind() const { return kind_; }
    std::string name() const;
    double floor() const { return floor_; }
    double tsallis_index() const { return q_; }
    double constant_value() const { return c_; }
    SignConvention sign() const;
    StrongConvexity strong_convexity() const;
    bool is_entropy_family() const {
        return kind_ == RegKind::shifted_entropy || kind_ == RegKind::raw_entropy;
    }

    /// Unchecked value; p must lie on the simplex.
    double value(std::span<const double> p) const;
    /// Unchecked gradient at the floored version of p, written to out.
    void gradient(std::span<const double> p, std::span<double> out) const;
    /// Bound constants for |A| actions on this regularizer's floored simplex.
    BoundConstants bounds(std::size_t num_actions) const;

    /// Copy with a different interior floor.
    Regularizer with_floor(double floor) const;

private:
    Regularizer(RegKind kind, double floor, double q, double c) : kind_(kind), floor_(floor), q_(q), c_(c) {}

    RegKind kind_;
    double floor_;
    double q_;
    double c_;
};

/// Parses "shifted-entropy", "raw-entropy", "squared-l2", "tsallis", "constant".
RegKind parse_reg_kind(const std::string& name);

/// Raises entries below floor to floor and renormalizes; returns p unchanged
/// when no entry is below the floor.
std::vector<double> floored(std::span<const double> p, double floor);

double eval_omega(const Regularizer& reg, std::span<const double> p);
std::vector<double> grad_omega(const Regularizer& reg, std::span<const double> p);
/// D(p_new || p_old) = omega(p_new) - omega(p_old) - <grad omega(p_old), p_new - p_old>.
double bregman(const Regularizer& reg, std::span<const double> p_new, std::span<const double> p_old);
BoundConstants bound_constants(const Regularizer& reg, std::size_t num_actions, double floor);

/// Maximizer of <p, q> - lambda * omega(p) over one simplex row.
struct LocalGreedy {
    double value;            ///< attained objective
    std::size_t iterations;  ///< inner iterations (0 for closed forms)
};

/**
 * Solves max_p <p, q> - lambda * omega(p) for a single state and writes the
 * maximizer to out. Closed forms: softmax(q / lambda) for the entropy family,
 * Euclidean projection for squared-l2 and tsallis(2), argmax (lowest index on
 * ties) for lambda = 0. tsallis(q < 2) solves the stationarity conditions on
 * the floored simplex by bisection on the multiplier, stopped once the bracket
 * is below tol / 1000 (relative).
 */
LocalGreedy local_greedy(const Regularizer& reg, std::span<const double> q, double lambda,
                         std::span<double> out, double tol = 1e-12, std::size_t max_iterations = 200000);

/// Euclidean projection of y onto {p : p >= lower, sum p = 1}; lower * |y| < 1.
void project_simplex_row(std::span<const double> y, std::span<double> out, double lower = 0.0);

} // namespace rmdp
