#include "rmdp/regularizer.hpp"

#include "rmdp/config.hpp"
#include "rmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rmdp {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void check_floor(double floor) {
    if (!(floor > 0.0) || !(floor < 1.0))
        throw ArgumentError("regularizer: interior floor must lie in (0, 1)");
}

void check_simplex(std::span<const double> p, const char* what) {
    const double tol = default_config().simplex_input_tol;
    if (p.empty())
        throw ArgumentError(std::string(what) + ": empty distribution");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || p[i] < -tol)
            throw ArgumentError(std::string(what) + ": entry " + std::to_string(i) + " is off the simplex");
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > tol)
        throw ArgumentError(std::string(what) + ": entries sum to " + std::to_string(sum));
}

} // namespace

Regularizer Regularizer::shifted_entropy(double floor) {
    check_floor(floor);
    return {RegKind::shifted_entropy, floor, 1.0, 0.0};
}

Regularizer Regularizer::raw_entropy(double floor) {
    check_floor(floor);
    return {RegKind::raw_entropy, floor, 1.0, 0.0};
}

Regularizer Regularizer::squared_l2(double floor) {
    check_floor(floor);
    return {RegKind::squared_l2, floor, 2.0, 0.0};
}

Regularizer Regularizer::tsallis(double q, double floor) {
    check_floor(floor);
    if (!(q > 1.0) || q > 2.0)
        throw ArgumentError("tsallis: index must lie in (1, 2]");
    return {RegKind::tsallis, floor, q, 0.0};
}

Regularizer Regularizer::constant(double c, double floor) {
    check_floor(floor);
    if (!std::isfinite(c))
        throw ArgumentError("constant regularizer: value must be finite");
    return {RegKind::constant, floor, 1.0, c};
}

Regularizer Regularizer::with_floor(double floor) const {
    check_floor(floor);
    Regularizer r = *this;
    r.floor_ = floor;
    return r;
}

std::string Regularizer::name() const {
    switch (kind_) {
    case RegKind::shifted_entropy: return "shifted-entropy";
    case RegKind::raw_entropy: return "raw-entropy";
    case RegKind::squared_l2: return "squared-l2";
    case RegKind::tsallis: return "tsallis";
    case RegKind::constant: return "constant";
    }
    return "unknown";
}

SignConvention Regularizer::sign() const {
    if (kind_ == RegKind::raw_entropy || (kind_ == RegKind::constant && c_ <= 0.0))
        return SignConvention::nonpositive;
    return SignConvention::nonnegative;
}

StrongConvexity Regularizer::strong_convexity() const {
    switch (kind_) {
    case RegKind::shifted_entropy:
    case RegKind::raw_entropy: return {1.0, ConvexityNorm::l1};
    case RegKind::squared_l2: return {1.0, ConvexityNorm::l2};
    case RegKind::tsallis: return {q_, ConvexityNorm::l2};
    case RegKind::constant: return {0.0, ConvexityNorm::l2};
    }
    return {0.0, ConvexityNorm::l2};
}

double Regularizer::value(std::span<const double> p) const {
    const double n = static_cast<double>(p.size());
    switch (kind_) {
    case RegKind::shifted_entropy:
    case RegKind::raw_entropy: {
        double s = 0.0;
        for (double x : p) s += xlogx(x);
        return kind_ == RegKind::shifted_entropy ? std::log(n) + s : s;
    }
    case RegKind::squared_l2: {
        double s = 0.0;
        for (double x : p) s += x * x;
        return 0.5 * s;
    }
    case RegKind::tsallis: {
        double s = 0.0;
        for (double x : p) s += x > 0.0 ? std::pow(x, q_) : 0.0;
        return (s - std::pow(n, 1.0 - q_)) / (q_ - 1.0);
    }
    case RegKind::constant: return c_;
    }
    return 0.0;
}

void Regularizer::gradient(std::span<const double> p, std::span<double> out) const {
    const bool needs_floor = kind_ == RegKind::shifted_entropy || kind_ == RegKind::raw_entropy ||
                             (kind_ == RegKind::tsallis && q_ < 2.0);
    std::vector<double> tmp;
    std::span<const double> x = p;
    if (needs_floor && std::any_of(p.begin(), p.end(), [&](double v) { return v < floor_; })) {
        tmp = floored(p, floor_);
        x = tmp;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        switch (kind_) {
        case RegKind::shifted_entropy:
        case RegKind::raw_entropy: out[i] = std::log(x[i]) + 1.0; break;
        case RegKind::squared_l2: out[i] = x[i]; break;
        case RegKind::tsallis: out[i] = q_ / (q_ - 1.0) * std::pow(x[i], q_ - 1.0); break;
        case RegKind::constant: out[i] = 0.0; break;
        }
    }
}

BoundConstants Regularizer::bounds(std::size_t num_actions) const {
    const double n = static_cast<double>(num_actions);
    switch (kind_) {
    case RegKind::shifted_entropy:
    case RegKind::raw_entropy:
        return {std::log(n), std::max(std::abs(std::log(floor_) + 1.0), 1.0), 1.0 / floor_};
    case RegKind::squared_l2: return {0.5, 1.0, 1.0};
    case RegKind::tsallis: {
        const double c_phi = (1.0 - std::pow(n, 1.0 - q_)) / (q_ - 1.0);
        const double pmax = std::max(1.0 - (n - 1.0) * floor_, floor_);
        const double c1 = q_ / (q_ - 1.0) * std::pow(pmax, q_ - 1.0);
        const double c2 = q_ == 2.0 ? 2.0 : q_ * std::pow(floor_, q_ - 2.0);
        return {c_phi, c1, c2};
    }
    case RegKind::constant: return {std::abs(c_), 0.0, 0.0};
    }
    return {0.0, 0.0, 0.0};
}

RegKind parse_reg_kind(const std::string& name) {
    if (name == "shifted-entropy" || name == "entropy") return RegKind::shifted_entropy;
    if (name == "raw-entropy") return RegKind::raw_entropy;
    if (name == "squared-l2") return RegKind::squared_l2;
    if (name == "tsallis") return RegKind::tsallis;
    if (name == "constant") return RegKind::constant;
    throw ArgumentError("unknown regularizer '" + name + "'");
}

std::vector<double> floored(std::span<const double> p, double floor) {
    std::vector<double> out(p.begin(), p.end());
    if (std::none_of(out.begin(), out.end(), [&](double v) { return v < floor; }))
        return out;
    for (double& v : out) v = std::max(v, floor);
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= sum;
    return out;
}

double eval_omega(const Regularizer& reg, std::span<const double> p) {
    check_simplex(p, "eval_omega");
    return reg.value(p);
}

std::vector<double> grad_omega(const Regularizer& reg, std::span<const double> p) {
    check_simplex(p, "grad_omega");
    std::vector<double> g(p.size());
    reg.gradient(p, g);
    return g;
}

double bregman(const Regularizer& reg, std::span<const double> p_new, std::span<const double> p_old) {
    check_simplex(p_new, "bregman");
    check_simplex(p_old, "bregman");
    if (p_new.size() != p_old.size())
        throw ArgumentError("bregman: arguments differ in length");
    if (reg.is_entropy_family()) {
        // KL(p_new || p_old) on the floored old point, exact 0 log 0 on the new one.
        const std::vector<double> old = floored(p_old, reg.floor());
        double d = 0.0;
        for (std::size_t i = 0; i < p_new.size(); ++i)
            if (p_new[i] > 0.0) d += p_new[i] * (std::log(p_new[i]) - std::log(old[i]));
        return std::max(d, 0.0);
    }
    std::vector<double> g(p_old.size());
    reg.gradient(p_old, g);
    double inner = 0.0;
    for (std::size_t i = 0; i < p_new.size(); ++i) inner += g[i] * (p_new[i] - p_old[i]);
    return reg.value(p_new) - reg.value(p_old) - inner;
}

BoundConstants bound_constants(const Regularizer& reg, std::size_t num_actions, double floor) {
    if (num_actions == 0)
        throw ArgumentError("bound_constants: no actions");
    if (!(floor > 0.0) || !(floor * static_cast<double>(num_actions) < 1.0) || (num_actions == 1 && floor >= 1.0))
        throw ArgumentError("bound_constants: floor must lie in (0, 1/|A|)");
    return reg.with_floor(floor).bounds(num_actions);
}

void project_simplex_row(std::span<const double> y, std::span<double> out, double lower) {
    const std::size_t n = y.size();
    const double mass = 1.0 - lower * static_cast<double>(n);
    if (mass < 0.0)
        throw ArgumentError("project_simplex_row: lower bound times |A| exceeds 1");
    std::vector<double> u(y.begin(), y.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        cumsum += u[j] - lower;
        const double t = (cumsum - mass) / static_cast<double>(j + 1);
        if (u[j] - lower - t > 0.0) tau = t;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = lower + std::max(y[i] - lower - tau, 0.0);
}

namespace {

double objective_row(const Regularizer& reg, std::span<const double> q, double lambda, std::span<const double> p) {
    double v = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) v += p[i] * q[i];
    return v - lambda * reg.value(p);
}

} // namespace

LocalGreedy local_greedy(const Regularizer& reg, std::span<const double> q, double lambda, std::span<double> out,
                         double tol, std::size_t max_iterations) {
    if (lambda < 0.0)
        throw ArgumentError("local_greedy: negative lambda");
    const std::size_t n = q.size();
    if (lambda == 0.0 || reg.kind() == RegKind::constant) {
        const std::size_t best = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
        std::fill(out.begin(), out.end(), 0.0);
        out[best] = 1.0;
        return {objective_row(reg, q, lambda, out), 0};
    }
    switch (reg.kind()) {
    case RegKind::shifted_entropy:
    case RegKind::raw_entropy: {
        const double m = *std::max_element(q.begin(), q.end());
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = std::exp((q[i] - m) / lambda);
            z += out[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] /= z;
        double v = m + lambda * std::log(z);
        if (reg.kind() == RegKind::shifted_entropy) v -= lambda * std::log(static_cast<double>(n));
        return {v, 0};
    }
    case RegKind::squared_l2:
    case RegKind::tsallis: {
        if (reg.kind() == RegKind::squared_l2 || reg.tsallis_index() == 2.0) {
            const double scale = reg.kind() == RegKind::squared_l2 ? lambda : 2.0 * lambda;
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) y[i] = q[i] / scale;
            project_simplex_row(y, out);
            return {objective_row(reg, q, lambda, out), 0};
        }
        // p_a(tau) = max(floor, ((q-1)(q_a - tau) / (lambda q))^(1/(q-1))); bisect on tau until sum p = 1
        const double floor = std::min(reg.floor(), 0.5 / static_cast<double>(n));
        const double k = reg.tsallis_index();
        const double qmax = *std::max_element(q.begin(), q.end());
        auto fill = [&](double tau) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = q[i] > tau ? std::pow((k - 1.0) * (q[i] - tau) / (lambda * k), 1.0 / (k - 1.0)) : 0.0;
                sum += (out[i] = std::max(floor, x));
            }
            return sum;
        };
        double lo = qmax - lambda * k / (k - 1.0), hi = qmax;
        std::size_t it = 0;
        while (it < max_iterations) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            ++it;
            (fill(mid) >= 1.0 ? lo : hi) = mid;
            if (hi - lo <= tol * 1e-3 * std::max(1.0, std::abs(lo))) break;
        }
        const double sum = fill(lo);
        for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
        return {objective_row(reg, q, lambda, out), it};
    }
    case RegKind::constant: break;
    }
    return {0.0, 0};
}

} // namespace rmdp
