#include "rmdp/experiments.hpp"

#include "rmdp/bellman.hpp"
#include "rmdp/errors.hpp"
#include "rmdp/grad.hpp"
#include "rmdp/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace rmdp {

using nlohmann::json;

TabularMdp generate_random_mdp(std::size_t states, std::size_t actions, double sparsity, std::uint64_t seed,
                               double gamma) {
    if (states == 0 || actions == 0)
        throw ArgumentError("generate_random_mdp: states and actions must be positive");
    if (!(sparsity > 0.0 && sparsity <= 1.0))
        throw ArgumentError("generate_random_mdp: sparsity must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    const std::size_t support =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(sparsity * static_cast<double>(states))), 1, states);
    std::vector<double> transition(states * actions * states, 0.0);
    std::vector<std::size_t> idx(states);
    for (std::size_t sa = 0; sa < states * actions; ++sa) {
        for (std::size_t i = 0; i < states; ++i) idx[i] = i;
        for (std::size_t i = 0; i < support; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (states - i));
            std::swap(idx[i], idx[j]);
        }
        double sum = 0.0;
        double* row = transition.data() + sa * states;
        for (std::size_t i = 0; i < support; ++i) {
            const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
            row[idx[i]] = -std::log(u);
            sum += row[idx[i]];
        }
        for (std::size_t i = 0; i < support; ++i) row[idx[i]] /= sum;
    }
    std::vector<double> reward(states * actions);
    for (double& r : reward) r = uniform01(rng);
    return {states, actions, std::move(reward), std::move(transition), gamma, uniform_distribution(states)};
}

TabularMdp chain_mdp(std::size_t length, double gamma, double lure) {
    if (length == 0)
        throw ArgumentError("chain_mdp: length must be positive");
    if (!(lure >= 0.0 && lure <= 1.0))
        throw ArgumentError("chain_mdp: lure must lie in [0, 1]");
    const std::size_t S = length, A = 2;
    std::vector<double> transition(S * A * S, 0.0), reward(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        transition[(s * A + 0) * S + std::min(s + 1, S - 1)] = 1.0;
        transition[(s * A + 1) * S + s] = 1.0;
    }
    reward[0 * A + 1] = lure;
    reward[(S - 1) * A + 0] = 1.0;
    reward[(S - 1) * A + 1] = 1.0;
    Distribution mu(S, 0.0);
    mu[0] = 1.0;
    return {S, A, std::move(reward), std::move(transition), gamma, std::move(mu)};
}

Regularizer RegSpec::make() const {
    switch (parse_reg_kind(kind)) {
    case RegKind::shifted_entropy: return Regularizer::shifted_entropy(floor);
    case RegKind::raw_entropy: return Regularizer::raw_entropy(floor);
    case RegKind::squared_l2: return Regularizer::squared_l2(floor);
    case RegKind::tsallis: return Regularizer::tsallis(q, floor);
    case RegKind::constant: return Regularizer::constant(c, floor);
    }
    throw ConfigError("unknown regularizer");
}

double ScheduleSpec::lambda_at(double lambda0, std::size_t t) const {
    const double k = static_cast<double>(t + 1);
    if (kind == "fixed") return lambda0;
    if (kind == "halving") return halving_lambda(lambda0, t);
    if (kind == "poly") return lambda0 / std::pow(k, alpha);
    if (kind == "log") return lambda0 / std::log(k + 1.0);
    throw ConfigError("unknown schedule '" + kind + "'");
}

std::string ScheduleSpec::label() const {
    if (kind == "poly") {
        std::ostringstream os;
        os << "poly_" << alpha;
        return os.str();
    }
    return kind;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.environment == b.environment && a.regularizer == b.regularizer && a.binding == b.binding &&
           a.rule == b.rule && a.schedule == b.schedule && a.schedules == b.schedules && a.lambda0 == b.lambda0 &&
           a.epochs == b.epochs && a.targets == b.targets && a.max_iterations == b.max_iterations &&
           a.unregularized_baseline == b.unregularized_baseline && a.mu == b.mu && a.nu == b.nu &&
           a.mu_weights == b.mu_weights && a.nu_weights == b.nu_weights && a.seed == b.seed && a.suite == b.suite &&
           a.record_stride == b.record_stride && a.save_snapshots == b.save_snapshots &&
           a.duality_grid == b.duality_grid && a.duality_tolerance == b.duality_tolerance && a.output == b.output &&
           a.format == b.format;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    if (!obj.is_object())
        throw ConfigError(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k))
            throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

ScheduleSpec schedule_from_json(const json& j) {
    ScheduleSpec s;
    if (j.is_string()) {
        s.kind = j.get<std::string>();
    } else {
        reject_unknown(j, {"kind", "alpha"}, "schedule");
        read(j, "kind", s.kind);
        read(j, "alpha", s.alpha);
    }
    if (s.kind != "fixed" && s.kind != "halving" && s.kind != "poly" && s.kind != "log")
        throw ConfigError("unknown schedule '" + s.kind + "'");
    if (s.kind == "poly" && !(s.alpha > 0.0))
        throw ConfigError("poly schedule needs alpha > 0");
    return s;
}

json schedule_to_json(const ScheduleSpec& s) { return {{"kind", s.kind}, {"alpha", s.alpha}}; }

void read_distribution(const json& doc, const char* key, std::string& mode, std::vector<double>& weights) {
    if (!doc.contains(key)) return;
    const json& j = doc.at(key);
    if (j.is_string()) {
        mode = j.get<std::string>();
        if (mode != "uniform" && mode != "initial")
            throw ConfigError(std::string(key) + " must be \"uniform\", \"initial\" or an array");
        weights.clear();
    } else {
        mode = "weights";
        weights = j.get<std::vector<double>>();
    }
}

json distribution_to_json(const std::string& mode, const std::vector<double>& weights) {
    if (mode == "weights") return weights;
    return mode;
}

ExperimentConfig parse(const json& doc) {
    ExperimentConfig cfg;
    reject_unknown(doc,
                   {"environment", "regularizer", "solver", "rule", "schedule", "schedules", "lambda0", "epochs",
                    "targets", "max_iterations", "unregularized_baseline", "mu", "nu", "seed", "suite",
                    "record_stride", "save_snapshots", "duality", "output", "format"},
                   "config");
    if (doc.contains("environment")) {
        const json& e = doc.at("environment");
        reject_unknown(e, {"kind", "states", "actions", "sparsity", "seed", "gamma", "length", "lure", "path"},
                       "environment");
        auto& env = cfg.environment;
        read(e, "kind", env.kind);
        read(e, "states", env.states);
        read(e, "actions", env.actions);
        read(e, "sparsity", env.sparsity);
        read(e, "seed", env.seed);
        read(e, "gamma", env.gamma);
        read(e, "length", env.length);
        read(e, "lure", env.lure);
        read(e, "path", env.path);
        if (env.kind != "random" && env.kind != "chain" && env.kind != "file")
            throw ConfigError("unknown environment kind '" + env.kind + "'");
    }
    if (doc.contains("regularizer")) {
        const json& r = doc.at("regularizer");
        reject_unknown(r, {"kind", "floor", "q", "c"}, "regularizer");
        read(r, "kind", cfg.regularizer.kind);
        read(r, "floor", cfg.regularizer.floor);
        read(r, "q", cfg.regularizer.q);
        read(r, "c", cfg.regularizer.c);
    }
    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        reject_unknown(s,
                       {"name", "budget", "iterations", "certification", "eval_steps", "greedy_tolerance",
                        "adversarial", "max_iterations", "convergence_tolerance", "step", "gradient", "trajectories",
                        "horizon", "include_initial_regularizer", "selection_trajectories", "rho_nu",
                        "concentrability", "budget_scale"},
                       "solver");
        auto& b = cfg.binding;
        if (s.contains("name")) b.solver = parse_solver(s.at("name").get<std::string>());
        if (s.contains("budget")) b.budget = parse_budget(s.at("budget").get<std::string>());
        read(s, "iterations", b.iterations);
        if (s.contains("certification"))
            b.certification = parse_certification(s.at("certification").get<std::string>());
        if (s.contains("eval_steps")) {
            const json& m = s.at("eval_steps");
            if (m.is_string()) {
                if (m.get<std::string>() != "infinite")
                    throw ConfigError("eval_steps must be a positive integer or \"infinite\"");
                b.bellman.eval_steps.reset();
            } else {
                b.bellman.eval_steps = m.get<std::size_t>();
            }
        }
        read(s, "greedy_tolerance", b.bellman.greedy_tolerance);
        read(s, "adversarial", b.bellman.adversarial);
        read(s, "max_iterations", b.bellman.max_iterations);
        read(s, "convergence_tolerance", b.bellman.convergence_tolerance);
        if (s.contains("step")) {
            const json& st = s.at("step");
            if (st.is_string()) {
                if (st.get<std::string>() != "auto")
                    throw ConfigError("step must be a number or \"auto\"");
                b.step.reset();
            } else {
                b.step = st.get<double>();
            }
        }
        if (s.contains("gradient")) {
            const auto g = s.at("gradient").get<std::string>();
            if (g == "exact") b.gradient = GradientMode::exact;
            else if (g == "sampled") b.gradient = GradientMode::sampled;
            else throw ConfigError("gradient must be \"exact\" or \"sampled\"");
        }
        read(s, "trajectories", b.sampling.trajectories);
        read(s, "horizon", b.sampling.horizon);
        read(s, "include_initial_regularizer", b.sampling.include_initial_regularizer);
        b.selection.horizon = b.sampling.horizon;
        b.selection.include_initial_regularizer = b.sampling.include_initial_regularizer;
        read(s, "selection_trajectories", b.selection.trajectories);
        read(s, "rho_nu", b.rho_nu);
        read(s, "concentrability", b.concentrability);
        read(s, "budget_scale", b.budget_scale);
    }
    if (doc.contains("rule")) {
        const json& r = doc.at("rule");
        reject_unknown(r, {"kind", "epsilon_hat", "contraction_factor"}, "rule");
        if (r.contains("kind")) cfg.rule.kind = parse_prop(r.at("kind").get<std::string>());
        read(r, "epsilon_hat", cfg.rule.epsilon_hat);
        read(r, "contraction_factor", cfg.rule.contraction_factor);
    }
    if (doc.contains("schedule")) cfg.schedule = schedule_from_json(doc.at("schedule"));
    if (doc.contains("schedules")) {
        cfg.schedules.clear();
        for (const auto& j : doc.at("schedules")) cfg.schedules.push_back(schedule_from_json(j));
    }
    read(doc, "lambda0", cfg.lambda0);
    read(doc, "epochs", cfg.epochs);
    read(doc, "targets", cfg.targets);
    read(doc, "max_iterations", cfg.max_iterations);
    read(doc, "unregularized_baseline", cfg.unregularized_baseline);
    read_distribution(doc, "mu", cfg.mu, cfg.mu_weights);
    read_distribution(doc, "nu", cfg.nu, cfg.nu_weights);
    read(doc, "seed", cfg.seed);
    read(doc, "suite", cfg.suite);
    read(doc, "record_stride", cfg.record_stride);
    read(doc, "save_snapshots", cfg.save_snapshots);
    if (doc.contains("duality")) {
        const json& d = doc.at("duality");
        reject_unknown(d, {"grid", "tolerance"}, "duality");
        read(d, "grid", cfg.duality_grid);
        read(d, "tolerance", cfg.duality_tolerance);
    }
    read(doc, "output", cfg.output);
    read(doc, "format", cfg.format);

    if (!(cfg.lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
    for (double e : cfg.targets)
        if (!(e > 0.0)) throw ConfigError("targets must be positive");
    if (cfg.suite == 0) throw ConfigError("suite must be at least 1");
    if (cfg.record_stride == 0) throw ConfigError("record_stride must be at least 1");
    if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("format must be csv or json");
    try {
        cfg.regularizer.make();
        cfg.binding.validate();
        cfg.rule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

} // namespace

ExperimentConfig config_from_json(const json& doc) {
    try {
        return parse(doc);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json config_to_json(const ExperimentConfig& cfg) {
    const auto& env = cfg.environment;
    const auto& b = cfg.binding;
    json solver{{"name", to_string(b.solver)},
                {"budget", to_string(b.budget)},
                {"iterations", b.iterations},
                {"certification", to_string(b.certification)},
                {"greedy_tolerance", b.bellman.greedy_tolerance},
                {"adversarial", b.bellman.adversarial},
                {"max_iterations", b.bellman.max_iterations},
                {"convergence_tolerance", b.bellman.convergence_tolerance},
                {"gradient", b.gradient == GradientMode::exact ? "exact" : "sampled"},
                {"trajectories", b.sampling.trajectories},
                {"horizon", b.sampling.horizon},
                {"include_initial_regularizer", b.sampling.include_initial_regularizer},
                {"selection_trajectories", b.selection.trajectories},
                {"rho_nu", b.rho_nu},
                {"concentrability", b.concentrability},
                {"budget_scale", b.budget_scale}};
    solver["eval_steps"] = b.bellman.eval_steps ? json(*b.bellman.eval_steps) : json("infinite");
    solver["step"] = b.step ? json(*b.step) : json("auto");
    json schedules = json::array();
    for (const auto& s : cfg.schedules) schedules.push_back(schedule_to_json(s));
    return json{{"environment",
                 {{"kind", env.kind},
                  {"states", env.states},
                  {"actions", env.actions},
                  {"sparsity", env.sparsity},
                  {"seed", env.seed},
                  {"gamma", env.gamma},
                  {"length", env.length},
                  {"lure", env.lure},
                  {"path", env.path}}},
                {"regularizer",
                 {{"kind", cfg.regularizer.kind},
                  {"floor", cfg.regularizer.floor},
                  {"q", cfg.regularizer.q},
                  {"c", cfg.regularizer.c}}},
                {"solver", solver},
                {"rule",
                 {{"kind", to_string(cfg.rule.kind)},
                  {"epsilon_hat", cfg.rule.epsilon_hat},
                  {"contraction_factor", cfg.rule.contraction_factor}}},
                {"schedule", schedule_to_json(cfg.schedule)},
                {"schedules", schedules},
                {"lambda0", cfg.lambda0},
                {"epochs", cfg.epochs},
                {"targets", cfg.targets},
                {"max_iterations", cfg.max_iterations},
                {"unregularized_baseline", cfg.unregularized_baseline},
                {"mu", distribution_to_json(cfg.mu, cfg.mu_weights)},
                {"nu", distribution_to_json(cfg.nu, cfg.nu_weights)},
                {"seed", cfg.seed},
                {"suite", cfg.suite},
                {"record_stride", cfg.record_stride},
                {"save_snapshots", cfg.save_snapshots},
                {"duality", {{"grid", cfg.duality_grid}, {"tolerance", cfg.duality_tolerance}}},
                {"output", cfg.output},
                {"format", cfg.format}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(doc);
}

TabularMdp build_environment(const ExperimentConfig& cfg, std::size_t member) {
    const auto& env = cfg.environment;
    try {
        if (env.kind == "random")
            return generate_random_mdp(env.states, env.actions, env.sparsity, env.seed + member, env.gamma);
        if (env.kind == "chain") return chain_mdp(env.length, env.gamma, env.lure);
        if (env.kind == "file") {
            if (!std::filesystem::is_regular_file(env.path))
                throw ConfigError("environment: cannot open mdp file '" + env.path + "'");
            return load_mdp(env.path);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("environment: ") + e.what());
    }
    throw ConfigError("unknown environment kind '" + env.kind + "'");
}

namespace {

Distribution resolve(const std::string& mode, const std::vector<double>& weights, const TabularMdp& mdp,
                     const char* what) {
    if (mode == "uniform") return uniform_distribution(mdp.num_states());
    if (mode == "initial") return mdp.initial_dist();
    try {
        check_distribution(weights, mdp.num_states(), what);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return weights;
}

} // namespace

Distribution resolve_mu(const ExperimentConfig& cfg, const TabularMdp& mdp) {
    return resolve(cfg.mu, cfg.mu_weights, mdp, "mu");
}

Distribution resolve_nu(const ExperimentConfig& cfg, const TabularMdp& mdp) {
    return resolve(cfg.nu, cfg.nu_weights, mdp, "nu");
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ArgumentError("loglog_slope: need at least two paired points");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

struct RunSpec {
    std::string name;
    std::size_t member;
    bool fixed;             ///< single solver run at constant lambda
    double lambda;          ///< fixed runs
    ScheduleSpec schedule;  ///< reduction runs
    std::vector<double> targets;
};

struct Member {
    TabularMdp mdp;
    Distribution mu;
    Distribution nu;
    double vstar_mu;
};

RunRecord execute(const ExperimentConfig& cfg, const Member& m, const RunSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    const Regularizer reg = cfg.regularizer.make();
    const TabularMdp& mdp = m.mdp;
    RunRecord rec;
    rec.name = spec.name;
    rec.member = spec.member;
    rec.lambda = spec.fixed ? spec.lambda : kNaN;
    rec.first_hit.assign(spec.targets.size(), npos);
    const double smallest = *std::min_element(spec.targets.begin(), spec.targets.end());

    SubSolverBinding binding = cfg.binding;
    binding.seed = derive_seed(cfg.seed, spec.member);
    ReductionOptions opts;
    opts.nu = m.nu;

    std::size_t last_recorded = npos;
    auto push = [&](const RunRow& row, const Policy& p) {
        rec.rows.push_back(row);
        if (cfg.save_snapshots) rec.snapshots.push_back(p);
        last_recorded = row.iteration;
    };
    Policy last_policy;
    RunRow last_row;
    opts.observer = [&](const IterationEvent& ev) {
        RunRow row;
        row.epoch = ev.epoch;
        row.iteration = ev.total;
        row.lambda = ev.lambda;
        row.j_nu = objective(mdp, ev.policy, reg, ev.lambda, m.nu);
        row.j_mu = evaluate_policy(mdp, ev.policy).expect(m.mu);
        row.gap = m.vstar_mu - row.j_mu;
        row.samples = ev.samples;
        bool hit_now = false;
        for (std::size_t i = 0; i < spec.targets.size(); ++i)
            if (rec.first_hit[i] == npos && row.gap <= spec.targets[i]) {
                rec.first_hit[i] = ev.total;
                hit_now = true;
            }
        const bool finished = row.gap <= smallest;
        if (ev.total % cfg.record_stride == 0 || hit_now || finished) {
            row.grad_norm = exact_gradient(mdp, ev.policy, reg, ev.lambda, m.nu).tangent_norm();
            push(row, ev.policy);
        }
        last_row = row;
        last_policy = ev.policy;
        return !finished;
    };

    const Policy init = Policy::uniform(mdp.num_states(), mdp.num_actions());
    if (spec.fixed) {
        binding.budget = BudgetPolicy::fixed;
        binding.iterations = cfg.max_iterations;
        binding.certification = Certification::theoretical_budget;
        const double lam = spec.lambda;
        adapt_reduce_scheduled(mdp, reg, lam > 0.0 ? lam : 1.0,
                                     [lam](double, std::size_t) { return lam; }, init, binding, cfg.rule, 1, opts);
    } else {
        const ScheduleSpec sched = spec.schedule;
        adapt_reduce_scheduled(
            mdp, reg, cfg.lambda0, [sched](double l0, std::size_t t) { return sched.lambda_at(l0, t); }, init,
            binding, cfg.rule, cfg.epochs, opts);
    }
    if (last_recorded != last_row.iteration) {
        last_row.grad_norm = exact_gradient(mdp, last_policy, reg, last_row.lambda, m.nu).tangent_norm();
        push(last_row, last_policy);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::string eps_label(double eps) {
    std::ostringstream os;
    os << eps;
    return os.str();
}

std::vector<Member> build_members(const ExperimentConfig& cfg) {
    std::vector<Member> members;
    for (std::size_t i = 0; i < cfg.suite; ++i) {
        TabularMdp base = build_environment(cfg, i);
        Distribution mu = resolve_mu(cfg, base);
        Distribution nu = resolve_nu(cfg, base);
        TabularMdp mdp = base.with_initial_dist(mu);
        const double vstar = soft_optimal_oracle(mdp, cfg.regularizer.make(), 0.0).values.expect(mu);
        members.push_back({std::move(mdp), std::move(mu), std::move(nu), vstar});
    }
    return members;
}

std::vector<RunRecord> execute_all(const ExperimentConfig& cfg, const std::vector<Member>& members,
                                   const std::vector<RunSpec>& specs) {
    std::vector<RunRecord> runs(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(specs.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            runs[k] = execute(cfg, members[specs[k].member], specs[k]);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return runs;
}

void check_compatible(const ExperimentConfig& cfg) {
    const Regularizer reg = cfg.regularizer.make();
    if ((cfg.binding.solver == SolverId::softmax_pg || cfg.binding.solver == SolverId::mdpo) &&
        !reg.is_entropy_family())
        throw ConfigError(std::string(to_string(cfg.binding.solver)) + " requires an entropy-family regularizer");
    if (cfg.targets.empty())
        throw ConfigError("at least one target epsilon is required");
}

void summarize(ComparisonResult& res, const std::vector<double>& targets) {
    std::vector<std::string> methods;
    for (const RunRecord& r : res.runs) {
        const bool fixed = r.name.rfind("fixed_eps_", 0) == 0;
        const std::string method = fixed ? "fixed" : r.name;
        if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (fixed && r.name != "fixed_eps_" + eps_label(targets[i])) continue;
            SummaryRow row;
            row.method = method;
            row.member = r.member;
            row.epsilon = targets[i];
            row.reached = r.first_hit[i] != npos;
            row.iterations = r.first_hit[i];
            if (row.reached)
                for (const RunRow& rr : r.rows)
                    if (rr.iteration == r.first_hit[i]) {
                        row.samples = rr.samples;
                        break;
                    }
            res.summary.push_back(row);
        }
    }
    std::size_t members = 0;
    for (const RunRecord& r : res.runs) members = std::max(members, r.member + 1);
    for (const std::string& method : methods) {
        std::vector<double> slopes;
        for (std::size_t m = 0; m < members; ++m) {
            std::vector<double> x, y;
            for (const SummaryRow& row : res.summary)
                if (row.method == method && row.member == m && row.reached && row.iterations > 0) {
                    x.push_back(row.epsilon);
                    y.push_back(static_cast<double>(row.iterations));
                }
            SlopeFit fit{method, m, kNaN, x.size()};
            if (x.size() >= 2) {
                fit.slope = loglog_slope(x, y);
                slopes.push_back(fit.slope);
            }
            res.slopes.push_back(fit);
        }
        double med = kNaN;
        if (!slopes.empty()) {
            std::sort(slopes.begin(), slopes.end());
            const std::size_t n = slopes.size();
            med = n % 2 ? slopes[n / 2] : 0.5 * (slopes[n / 2 - 1] + slopes[n / 2]);
        }
        if (method == "fixed") res.median_slope_fixed = med;
        else if (method == "adapt_reduce") res.median_slope_adapt = med;
        else if (method == "unregularized") res.median_slope_baseline = med;
    }
}

} // namespace

ComparisonResult run_comparison(const ExperimentConfig& cfg) {
    check_compatible(cfg);
    const std::vector<Member> members = build_members(cfg);
    const double c_phi = cfg.regularizer.make().bounds(members.front().mdp.num_actions()).c_phi;
    if (!(c_phi > 0.0))
        throw ConfigError("fixed-lambda baseline needs a regularizer with C_phi > 0");
    std::vector<RunSpec> specs;
    for (std::size_t m = 0; m < members.size(); ++m) {
        const double gamma = members[m].mdp.discount();
        for (double eps : cfg.targets)
            specs.push_back({"fixed_eps_" + eps_label(eps), m, true, eps * (1.0 - gamma) / (2.0 * c_phi), {}, {eps}});
        specs.push_back({"adapt_reduce", m, false, kNaN, ScheduleSpec{"halving", 1.0}, cfg.targets});
        if (cfg.unregularized_baseline) specs.push_back({"unregularized", m, true, 0.0, {}, cfg.targets});
    }
    ComparisonResult res;
    res.runs = execute_all(cfg, members, specs);
    // fixed runs track a single target; widen first_hit to the full target list for the summary
    for (RunRecord& r : res.runs) {
        if (r.name.rfind("fixed_eps_", 0) != 0) continue;
        std::vector<std::size_t> hits(cfg.targets.size(), npos);
        for (std::size_t i = 0; i < cfg.targets.size(); ++i)
            if (r.name == "fixed_eps_" + eps_label(cfg.targets[i])) hits[i] = r.first_hit[0];
        r.first_hit = hits;
    }
    summarize(res, cfg.targets);
    return res;
}

ComparisonResult schedule_sweep(const ExperimentConfig& cfg) {
    check_compatible(cfg);
    if (cfg.schedules.empty())
        throw ConfigError("sweep needs a non-empty 'schedules' list");
    const std::vector<Member> members = build_members(cfg);
    std::vector<RunSpec> specs;
    for (std::size_t m = 0; m < members.size(); ++m)
        for (const ScheduleSpec& s : cfg.schedules) specs.push_back({s.label(), m, false, kNaN, s, cfg.targets});
    ComparisonResult res;
    res.runs = execute_all(cfg, members, specs);
    summarize(res, cfg.targets);
    return res;
}

DualityReport verify_strong_duality(const TabularMdp& mdp, const Regularizer& reg, std::span<const double> grid,
                                    double tolerance, const NumericConfig& cfg) {
    if (reg.sign() != SignConvention::nonpositive)
        throw ArgumentError("verify_strong_duality: regularizer '" + reg.name() +
                            "' has the nonnegative convention; duality needs Omega <= 0");
    if (std::find(grid.begin(), grid.end(), 0.0) == grid.end())
        throw ArgumentError("verify_strong_duality: lambda grid must contain 0");
    for (double l : grid)
        if (!(l >= 0.0)) throw ArgumentError("verify_strong_duality: negative lambda in grid");
    DualityReport rep;
    rep.grid.assign(grid.begin(), grid.end());
    std::sort(rep.grid.begin(), rep.grid.end());
    const auto& mu = mdp.initial_dist();
    for (double l : rep.grid) rep.values.push_back(soft_optimal_oracle(mdp, reg, l, cfg.oracle_tolerance, cfg).values.expect(mu));
    const auto it = std::min_element(rep.values.begin(), rep.values.end());
    rep.min_value = *it;
    rep.argmin_lambda = rep.grid[static_cast<std::size_t>(it - rep.values.begin())];
    rep.unregularized = rep.values.front();
    for (std::size_t i = 1; i < rep.values.size(); ++i)
        rep.worst_monotone_slack = std::min(rep.worst_monotone_slack, rep.values[i] - rep.values[i - 1]);
    rep.monotone = rep.worst_monotone_slack >= -1e-8;
    rep.passed = rep.monotone && std::abs(rep.min_value - rep.unregularized) <= tolerance;
    return rep;
}

} // namespace rmdp
