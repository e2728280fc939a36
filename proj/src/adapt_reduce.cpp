#include "rmdp/adapt_reduce.hpp"

#include "rmdp/errors.hpp"
#include "rmdp/grad.hpp"

#include <algorithm>
#include <cmath>

namespace rmdp {

void StoppingRule::validate() const {
    if (!(epsilon_hat >= 0.0))
        throw ArgumentError("stopping rule: epsilon_hat must be nonnegative");
    if (!(contraction_factor > 0.0 && contraction_factor < 1.0))
        throw ArgumentError("stopping rule: contraction factor must lie in (0, 1)");
}

void SubSolverBinding::validate() const {
    if (iterations == 0 && budget != BudgetPolicy::time_formula)
        throw ArgumentError("binding: iteration budget must be positive");
    if (step && !(*step > 0.0))
        throw ArgumentError("binding: step must be positive");
    if (!(budget_scale > 0.0))
        throw ArgumentError("binding: budget scale must be positive");
    if (budget == BudgetPolicy::until_certified && certification != Certification::oracle_gap)
        throw ArgumentError("binding: run-until-certified needs oracle-gap certification");
    if (gradient == GradientMode::sampled && solver != SolverId::pga)
        throw UnsupportedError("binding: sampled gradients are only available for pga");
    if (gradient == GradientMode::sampled && budget == BudgetPolicy::until_certified)
        throw UnsupportedError("binding: sampled pga cannot run until certified");
    if (budget == BudgetPolicy::time_formula && (solver == SolverId::softmax_pg || solver == SolverId::mdpo))
        throw UnsupportedError("binding: no time formula for " + std::string(to_string(solver)));
    bellman.validate();
}

const char* to_string(SolverId id) {
    switch (id) {
    case SolverId::rmpi: return "rmpi";
    case SolverId::pga: return "pga";
    case SolverId::softmax_pg: return "softmax_pg";
    case SolverId::mdpo: return "mdpo";
    }
    return "?";
}

SolverId parse_solver(const std::string& name) {
    if (name == "rmpi") return SolverId::rmpi;
    if (name == "pga") return SolverId::pga;
    if (name == "softmax_pg") return SolverId::softmax_pg;
    if (name == "mdpo") return SolverId::mdpo;
    throw ConfigError("unknown solver '" + name + "'");
}

const char* to_string(BudgetPolicy b) {
    switch (b) {
    case BudgetPolicy::fixed: return "fixed";
    case BudgetPolicy::time_formula: return "time_formula";
    case BudgetPolicy::until_certified: return "until_certified";
    }
    return "?";
}

BudgetPolicy parse_budget(const std::string& name) {
    if (name == "fixed") return BudgetPolicy::fixed;
    if (name == "time_formula") return BudgetPolicy::time_formula;
    if (name == "until_certified") return BudgetPolicy::until_certified;
    throw ConfigError("unknown budget policy '" + name + "'");
}

const char* to_string(Certification c) {
    return c == Certification::oracle_gap ? "oracle_gap" : "theoretical_budget";
}

Certification parse_certification(const std::string& name) {
    if (name == "oracle_gap") return Certification::oracle_gap;
    if (name == "theoretical_budget") return Certification::theoretical_budget;
    throw ConfigError("unknown certification mode '" + name + "'");
}

const char* to_string(PropKind k) { return k == PropKind::prop1 ? "prop1" : "prop2"; }

PropKind parse_prop(const std::string& name) {
    if (name == "prop1") return PropKind::prop1;
    if (name == "prop2") return PropKind::prop2;
    throw ConfigError("unknown stopping rule '" + name + "'");
}

const char* to_string(EpochStatus s) {
    switch (s) {
    case EpochStatus::certified: return "certified";
    case EpochStatus::uncertified: return "uncertified";
    case EpochStatus::assumed: return "assumed";
    }
    return "?";
}

double halving_lambda(double lambda0, std::size_t t) { return std::ldexp(lambda0, -static_cast<int>(t)); }

bool prop1_certify(double gap_before, double gap_after, const StoppingRule& rule) {
    if (gap_before < 0.0 || gap_after < 0.0)
        throw ArgumentError("prop1_certify: gaps must be nonnegative");
    return gap_after <= rule.contraction_factor * gap_before + rule.epsilon_hat;
}

double prop2_target(double lambda0, double c_phi, double gamma, std::size_t t) {
    return halving_lambda(lambda0, t) * c_phi / (1.0 - gamma);
}

std::size_t pga_epoch_budget(std::size_t num_states, double rho_nu, double l_lambda_t, double lambda0, double c_phi,
                             double gamma, std::size_t t) {
    if (!(rho_nu > 0.0) || !(l_lambda_t > 0.0) || !(lambda0 > 0.0) || !(c_phi > 0.0))
        throw ArgumentError("pga_epoch_budget: inputs must be positive");
    const double v = 128.0 * static_cast<double>(num_states) * rho_nu * rho_nu * l_lambda_t * (1.0 - gamma) /
                     (lambda0 * c_phi) * std::ldexp(1.0, static_cast<int>(t));
    return static_cast<std::size_t>(std::ceil(v));
}

std::size_t rmpi_epoch_budget(double concentrability, double gamma) {
    if (gamma == 0.0) return 1;
    const double v = std::log(8.0 * concentrability / (1.0 - gamma)) / std::log(1.0 / gamma);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(v)));
}

double theorem1_bound(double d0, double lambda0, double c_phi, double gamma, double eps_hat, std::size_t epochs) {
    const int T = static_cast<int>(epochs);
    return std::ldexp(d0, -2 * T) + 4.0 / 3.0 * eps_hat + std::ldexp(6.0 * lambda0 * c_phi / (1.0 - gamma), -T);
}

double theorem2_bound(double lambda0, double c_phi, double gamma, double eps_hat, std::size_t epochs) {
    return std::ldexp(6.0 * lambda0 * c_phi / (1.0 - gamma), -static_cast<int>(epochs)) + eps_hat;
}

ReductionResult adapt_reduce(const TabularMdp& mdp, const Regularizer& reg, double lambda0, const Policy& init,
                             const SubSolverBinding& binding, const StoppingRule& rule, std::size_t epochs,
                             const ReductionOptions& opts) {
    return adapt_reduce_scheduled(mdp, reg, lambda0, halving_lambda, init, binding, rule, epochs, opts);
}

ReductionResult adapt_reduce_scheduled(const TabularMdp& mdp, const Regularizer& reg, double lambda0,
                                       const LambdaSchedule& schedule, const Policy& init,
                                       const SubSolverBinding& binding, const StoppingRule& rule,
                                       std::size_t epochs, const ReductionOptions& opts) {
    if (!(lambda0 > 0.0))
        throw ArgumentError("adapt_reduce: lambda0 must be positive");
    binding.validate();
    rule.validate();
    if ((binding.solver == SolverId::softmax_pg || binding.solver == SolverId::mdpo) && !reg.is_entropy_family())
        throw UnsupportedError(std::string(to_string(binding.solver)) + " requires an entropy-family regularizer");
    if (init.num_states() != mdp.num_states() || init.num_actions() != mdp.num_actions())
        throw ShapeError("adapt_reduce: initial policy shape does not match mdp");

    const auto& cfg = opts.numeric;
    const auto& mu = mdp.initial_dist();
    const Distribution nu = opts.nu ? *opts.nu : mu;
    check_distribution(nu, mdp.num_states(), "adapt_reduce nu");
    const double gamma = mdp.discount();
    const double c_phi = reg.bounds(mdp.num_actions()).c_phi;
    const bool use_oracle = binding.certification == Certification::oracle_gap;

    ReductionResult res{init, {}};
    ReductionReport& rep = res.report;
    rep.lambda0 = lambda0;
    rep.c_phi = c_phi;
    rep.epsilon_hat = rule.epsilon_hat;

    Policy pi = init;
    if ((binding.solver == SolverId::softmax_pg || binding.solver == SolverId::mdpo) && pi.min_prob() <= 0.0) {
        std::vector<double> p;
        for (std::size_t s = 0; s < pi.num_states(); ++s) {
            auto row = floored(pi.row(s), reg.floor());
            p.insert(p.end(), row.begin(), row.end());
        }
        pi = Policy(pi.num_states(), pi.num_actions(), std::move(p));
    }
    SoftmaxParams theta;
    if (binding.solver == SolverId::softmax_pg) theta = SoftmaxParams::from_policy(pi);
    SimulatorHandle sim(mdp, binding.seed);

    std::size_t total = 0;
    std::size_t samples = 0;
    bool stopped = false;
    auto notify = [&](std::size_t epoch, std::size_t inner, double lambda, const Policy& p) {
        if (opts.observer && !opts.observer(IterationEvent{epoch, inner, total, lambda, p, samples})) stopped = true;
    };
    auto trace_row = [&](double lambda, double obj, double grad_norm, const Policy& p) {
        TraceRow row;
        row.iteration = total;
        row.lambda = lambda;
        row.objective = obj;
        row.grad_norm = grad_norm;
        row.min_prob = p.min_prob();
        row.samples = samples;
        rep.trace.rows.push_back(row);
    };

    notify(0, 0, epochs > 0 ? schedule(lambda0, 0) : lambda0, pi);

    for (std::size_t t = 0; t < epochs && !stopped; ++t) {
        const double lambda = schedule(lambda0, t);
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ArgumentError("adapt_reduce: schedule produced an invalid lambda");
        EpochRecord rec;
        rec.epoch = t;
        rec.lambda = lambda;
        rec.target = lambda * c_phi / (1.0 - gamma);

        double vstar_mu = kNaN;
        if (use_oracle) {
            vstar_mu = soft_optimal_oracle(mdp, reg, lambda, cfg.oracle_tolerance, cfg).values.expect(mu);
            rec.gap_before = std::max(0.0, vstar_mu - objective(mdp, pi, reg, lambda, mu, cfg));
            if (t == 0) rep.d0 = rec.gap_before;
        }
        auto gap_of = [&](const Policy& p) {
            return std::max(0.0, vstar_mu - objective(mdp, p, reg, lambda, mu, cfg));
        };
        auto certified = [&](double gap_after) {
            if (rule.kind == PropKind::prop1) return prop1_certify(rec.gap_before, gap_after, rule);
            return gap_after <= rec.target + rule.epsilon_hat;
        };

        std::size_t budget = binding.iterations;
        if (binding.budget == BudgetPolicy::time_formula) {
            if (binding.solver == SolverId::rmpi) {
                budget = rmpi_epoch_budget(binding.concentrability, gamma);
            } else {
                const double rho_nu = binding.rho_nu > 0.0
                                          ? binding.rho_nu
                                          : 1.0 / ((1.0 - gamma) * *std::min_element(nu.begin(), nu.end()));
                const std::size_t full = pga_epoch_budget(mdp.num_states(), rho_nu,
                                                          smoothness_constant(mdp, reg, lambda).l_lambda, lambda0,
                                                          c_phi, gamma, t);
                budget = std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::ceil(binding.budget_scale * static_cast<double>(full))));
            }
        }
        const bool until = binding.budget == BudgetPolicy::until_certified;

        StateValues v;
        if (binding.solver == SolverId::rmpi) v = regularized_value(mdp, pi, reg, lambda, cfg);
        const double L = binding.solver == SolverId::pga ? smoothness_constant(mdp, reg, lambda).l_lambda : 0.0;
        double eta = 0.0;
        switch (binding.solver) {
        case SolverId::pga: eta = binding.step.value_or(L > 0.0 ? 1.0 / L : 1.0); break;
        case SolverId::softmax_pg:
            eta = binding.step.value_or(softmax_auto_step(gamma, lambda, mdp.num_actions()));
            break;
        case SolverId::mdpo: eta = binding.step.value_or(lambda > 0.0 ? 1.0 / lambda : 1.0); break;
        case SolverId::rmpi: break;
        }

        Policy best = pi;
        double best_obj = -std::numeric_limits<double>::infinity();
        std::vector<Policy> candidates;
        std::size_t k = 0;
        bool done = false;
        while (k < budget && !done && !stopped) {
            double obj = kNaN, grad_norm = kNaN;
            switch (binding.solver) {
            case SolverId::rmpi: {
                RmpiStep st = rmpi_step(mdp, reg, lambda, v, binding.bellman, cfg);
                pi = std::move(st.policy);
                v = std::move(st.values);
                obj = objective(mdp, pi, reg, lambda, nu, cfg);
                break;
            }
            case SolverId::pga:
                if (binding.gradient == GradientMode::exact) {
                    PgaStep st = pga_step(mdp, reg, lambda, pi, nu, eta, cfg);
                    pi = std::move(st.policy);
                    obj = st.objective_after;
                    grad_norm = st.grad_norm;
                    if (obj > best_obj) {
                        best_obj = obj;
                        best = pi;
                    }
                } else {
                    const GradientField g = estimate_gradient(sim, pi, reg, lambda, nu, binding.sampling);
                    pi = pga_step_with(pi, g, eta, reg.floor(), cfg.exec);
                    samples += binding.sampling.trajectories;
                    rec.samples += binding.sampling.trajectories;
                    grad_norm = g.tangent_norm();
                    candidates.push_back(pi);
                }
                break;
            case SolverId::softmax_pg: {
                const GradientField g = softmax_gradient(mdp, reg, lambda, theta, nu, cfg);
                double sq = 0.0;
                for (std::size_t i = 0; i < theta.theta.size(); ++i) {
                    theta.theta[i] += eta * g.partials.values[i];
                    sq += g.partials.values[i] * g.partials.values[i];
                }
                pi = theta.policy();
                grad_norm = std::sqrt(sq);
                obj = objective(mdp, pi, reg, lambda, nu, cfg);
                break;
            }
            case SolverId::mdpo:
                pi = mdpo_update(mdp, reg, lambda, pi, eta, cfg);
                obj = objective(mdp, pi, reg, lambda, nu, cfg);
                break;
            }
            ++k;
            ++total;
            trace_row(lambda, obj, grad_norm, pi);
            notify(t, k, lambda, pi);
            if (until) done = certified(gap_of(pi));
        }
        if (binding.solver == SolverId::pga && binding.gradient == GradientMode::exact && k > 0 && !until) pi = best;
        if (!candidates.empty()) {
            const Selection sel = select_best_policy(sim, candidates, reg, lambda, nu, binding.selection);
            pi = candidates[sel.index];
            samples += candidates.size() * binding.selection.trajectories;
            rec.samples += candidates.size() * binding.selection.trajectories;
        }
        rec.iterations = k;

        if (use_oracle) {
            rec.gap_after = gap_of(pi);
            rec.status = certified(rec.gap_after) ? EpochStatus::certified : EpochStatus::uncertified;
            const double allowed =
                rule.kind == PropKind::prop1 ? rule.contraction_factor * rec.gap_before : rec.target;
            rep.epsilon_hat_measured = std::max(rep.epsilon_hat_measured, rec.gap_after - allowed);
        } else {
            rec.status = EpochStatus::assumed;
        }
        rep.epochs.push_back(rec);
    }

    rep.total_iterations = total;
    rep.total_samples = samples;
    if (use_oracle) {
        const double vstar = soft_optimal_oracle(mdp, reg, 0.0, cfg.oracle_tolerance, cfg).values.expect(mu);
        rep.final_gap = vstar - evaluate_policy(mdp, pi, cfg).expect(mu);
    }
    const double eps_hat = std::max(rule.epsilon_hat, rep.epsilon_hat_measured);
    rep.bound = rule.kind == PropKind::prop1 ? theorem1_bound(rep.d0, lambda0, c_phi, gamma, eps_hat, epochs)
                                             : theorem2_bound(lambda0, c_phi, gamma, eps_hat, epochs);
    rep.trace.status = SolverStatus::completed;
    if (!rep.epochs.empty() &&
        std::all_of(rep.epochs.begin(), rep.epochs.end(), [](const EpochRecord& e) { return e.status == EpochStatus::certified; }))
        rep.trace.status = SolverStatus::certified;
    res.policy = std::move(pi);
    return res;
}

} // namespace rmdp
