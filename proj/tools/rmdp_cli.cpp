#include "rmdp/adapt_reduce.hpp"
#include "rmdp/errors.hpp"
#include "rmdp/experiments.hpp"
#include "rmdp/io.hpp"
#include "rmdp/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace rmdp;
namespace fs = std::filesystem;

constexpr int kConfigError = 2;
constexpr int kInvariantError = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    bool quiet = false;
};

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output = c.out;
    if (!c.format.empty()) cfg.format = c.format;
    if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("format must be csv or json");
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

int run_solve(const Common& c) {
    const ExperimentConfig cfg = resolve(c);
    const TabularMdp base = build_environment(cfg, 0);
    const Distribution mu = resolve_mu(cfg, base);
    const TabularMdp mdp = base.with_initial_dist(mu);
    const Regularizer reg = cfg.regularizer.make();
    SubSolverBinding binding = cfg.binding;
    binding.seed = derive_seed(cfg.seed, 0);
    ReductionOptions opts;
    opts.nu = resolve_nu(cfg, mdp);
    const ScheduleSpec sched = cfg.schedule;
    const ReductionResult res = adapt_reduce_scheduled(
        mdp, reg, cfg.lambda0, [sched](double l0, std::size_t t) { return sched.lambda_at(l0, t); },
        Policy::uniform(mdp.num_states(), mdp.num_actions()), binding, cfg.rule, cfg.epochs, opts);

    const fs::path dir = ensure_dir(cfg.output);
    if (cfg.format == "json") {
        nlohmann::json doc = report_to_json(res.report);
        doc["policy"] = policy_to_json(res.policy);
        open_out(dir / "solve.json") << doc.dump(2) << '\n';
    } else {
        auto epochs = open_out(dir / "epochs.csv");
        write_epochs_csv(epochs, res.report);
        auto trace = open_out(dir / "trace.csv");
        write_trace_csv(trace, res.report.trace);
        open_out(dir / "policy.json") << policy_to_json(res.policy).dump() << '\n';
    }
    if (!c.quiet)
        std::cout << "epochs " << res.report.epochs.size() << "  iterations " << res.report.total_iterations
                  << "  final gap " << format_double(res.report.final_gap) << "  bound "
                  << format_double(res.report.bound) << '\n';
    return 0;
}

void print_comparison(const ComparisonResult& res) {
    for (const SummaryRow& r : res.summary) {
        std::cout << r.method << " member " << r.member << " eps " << format_double(r.epsilon) << ": ";
        if (r.reached) std::cout << r.iterations << " iterations\n";
        else std::cout << "not reached\n";
    }
    for (const SlopeFit& f : res.slopes)
        std::cout << "slope " << f.method << " member " << f.member << ": " << format_double(f.slope) << '\n';
}

int run_compare(const Common& c, bool sweep) {
    const ExperimentConfig cfg = resolve(c);
    const ComparisonResult res = sweep ? schedule_sweep(cfg) : run_comparison(cfg);
    write_comparison(cfg.output, res, cfg.format);
    if (!c.quiet) print_comparison(res);
    return 0;
}

int run_duality(const Common& c) {
    ExperimentConfig cfg = resolve(c);
    if (cfg.duality_grid.empty())
        for (int i = 0; i <= 100; ++i) cfg.duality_grid.push_back(i / 100.0);
    const Regularizer reg = cfg.regularizer.make();
    if (reg.sign() != SignConvention::nonpositive)
        throw ConfigError("duality needs a nonpositive regularizer such as raw-entropy");
    if (std::find(cfg.duality_grid.begin(), cfg.duality_grid.end(), 0.0) == cfg.duality_grid.end())
        throw ConfigError("duality grid must contain 0");
    const fs::path dir = ensure_dir(cfg.output);
    nlohmann::json all = nlohmann::json::array();
    bool ok = true;
    for (std::size_t m = 0; m < cfg.suite; ++m) {
        const TabularMdp base = build_environment(cfg, m);
        const TabularMdp mdp = base.with_initial_dist(resolve_mu(cfg, base));
        const DualityReport rep = verify_strong_duality(mdp, reg, cfg.duality_grid, cfg.duality_tolerance);
        ok = ok && rep.passed;
        if (cfg.format == "json") {
            nlohmann::json j = duality_to_json(rep);
            j["member"] = m;
            all.push_back(j);
        } else {
            auto os = open_out(dir / ("duality_" + std::to_string(m) + ".csv"));
            write_duality_csv(os, rep);
        }
        if (!c.quiet)
            std::cout << "member " << m << ": min " << format_double(rep.min_value) << " at lambda "
                      << format_double(rep.argmin_lambda) << ", unregularized " << format_double(rep.unregularized)
                      << (rep.passed ? "  ok" : "  FAILED") << '\n';
    }
    if (cfg.format == "json") open_out(dir / "duality.json") << all.dump(2) << '\n';
    return ok ? 0 : 3;
}

int run_gen(const Common& c) {
    ExperimentConfig cfg = resolve(c);
    if (c.seed) cfg.environment.seed = *c.seed;
    if (cfg.environment.kind == "file") throw ConfigError("gen needs a random or chain environment");
    const fs::path dir = ensure_dir(cfg.output);
    for (std::size_t m = 0; m < cfg.suite; ++m) {
        const fs::path p = dir / ("mdp_" + std::to_string(m) + ".json");
        save_mdp(build_environment(cfg, m), p.string());
        if (!c.quiet) std::cout << p.string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized MDP solvers and experiments"};
    app.require_subcommand(1);
    Common common;
    auto add_flags = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "experiment config (JSON)");
        sub->add_option("--seed", common.seed, "master seed");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("--quiet", common.quiet, "suppress console output");
    };
    auto* solve = app.add_subcommand("solve", "run one solver under a schedule on one MDP");
    auto* compare = app.add_subcommand("compare", "fixed lambda versus AdaptReduce iterations to epsilon");
    auto* duality = app.add_subcommand("duality", "check min over lambda of max J against the unregularized optimum");
    auto* sweep = app.add_subcommand("sweep", "AdaptReduce under several lambda schedules");
    auto* gen = app.add_subcommand("gen", "write random MDP files");
    for (auto* sub : {solve, compare, duality, sweep, gen}) add_flags(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*solve) return run_solve(common);
        if (*compare) return run_compare(common, false);
        if (*duality) return run_duality(common);
        if (*sweep) return run_compare(common, true);
        if (*gen) return run_gen(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const UnsupportedError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kInvariantError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
