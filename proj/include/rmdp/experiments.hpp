#pragma once

#include "rmdp/adapt_reduce.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rmdp {

/// Random Dirichlet(1) rows on a random support of ceil(sparsity * S) states, rewards U[0, 1].
TabularMdp generate_random_mdp(std::size_t states, std::size_t actions, double sparsity, std::uint64_t seed,
                               double gamma = 0.9);

/// Action 0 advances (last state absorbs), action 1 stays. Reward 1 at the last state, lure at state 0.
TabularMdp chain_mdp(std::size_t length, double gamma = 0.9, double lure = 0.1);

struct EnvSpec {
    std::string kind = "random";  ///< random | chain | file
    std::size_t states = 10;
    std::size_t actions = 3;
    double sparsity = 1.0;
    std::uint64_t seed = 7;
    double gamma = 0.9;
    std::size_t length = 10;
    double lure = 0.1;
    std::string path;

    friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

struct RegSpec {
    std::string kind = "shifted-entropy";
    double floor = 1e-6;
    double q = 2.0;
    double c = 0.0;

    Regularizer make() const;
    friend bool operator==(const RegSpec&, const RegSpec&) = default;
};

struct ScheduleSpec {
    std::string kind = "halving";  ///< fixed | halving | poly | log
    double alpha = 1.0;            ///< poly exponent

    /// fixed: lambda0; halving: lambda0 2^-t; poly: lambda0 / (t+1)^alpha; log: lambda0 / log(t+2).
    double lambda_at(double lambda0, std::size_t t) const;
    std::string label() const;
    friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct ExperimentConfig {
    EnvSpec environment;
    RegSpec regularizer;
    SubSolverBinding binding;
    StoppingRule rule;
    ScheduleSpec schedule;
    std::vector<ScheduleSpec> schedules;  ///< sweep
    double lambda0 = 1.0;
    std::size_t epochs = 20;
    std::vector<double> targets{0.2, 0.1, 0.05, 0.025};
    std::size_t max_iterations = 100000;  ///< cap for fixed-lambda and baseline runs
    bool unregularized_baseline = false;
    std::string mu = "initial";           ///< "initial" (the environment's), "uniform" or "weights"
    std::string nu = "uniform";
    std::vector<double> mu_weights;       ///< used with "weights"
    std::vector<double> nu_weights;
    std::uint64_t seed = 0;
    std::size_t suite = 1;                ///< number of seeds, environment.seed + i
    std::size_t record_stride = 1;
    bool save_snapshots = false;          ///< keep the policy behind every recorded row
    std::vector<double> duality_grid;
    double duality_tolerance = 1e-6;
    std::string output = "out";
    std::string format = "csv";

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Environment for suite member i (seed offset i for random MDPs).
TabularMdp build_environment(const ExperimentConfig& cfg, std::size_t member = 0);
Distribution resolve_mu(const ExperimentConfig& cfg, const TabularMdp& mdp);
Distribution resolve_nu(const ExperimentConfig& cfg, const TabularMdp& mdp);

struct RunRow {
    std::size_t epoch = 0;
    std::size_t iteration = 0;  ///< cumulative inner iterations
    double lambda = 0.0;
    double j_nu = 0.0;          ///< regularized at lambda, under nu
    double j_mu = 0.0;          ///< unregularized, under mu
    double gap = 0.0;           ///< V*(mu) - V^pi(mu)
    double grad_norm = kNaN;
    std::size_t samples = 0;
};

struct RunRecord {
    std::string name;       ///< e.g. "adapt_reduce", "fixed_eps=0.05"
    std::size_t member = 0; ///< suite index
    double lambda = kNaN;   ///< fixed runs only
    std::vector<RunRow> rows;
    std::vector<Policy> snapshots;             ///< policy at every recorded row
    std::vector<std::size_t> first_hit;        ///< per target: first iteration with gap <= eps, or npos
    double wall_seconds = 0.0;                 ///< excluded from deterministic outputs
};

struct SummaryRow {
    std::string method;
    std::size_t member = 0;
    double epsilon = 0.0;
    std::size_t iterations = 0;  ///< npos when the target was not reached
    std::size_t samples = 0;
    bool reached = false;
};

struct SlopeFit {
    std::string method;
    std::size_t member = 0;
    double slope = kNaN;  ///< d log(iterations) / d log(eps)
    std::size_t points = 0;
};

struct ComparisonResult {
    std::vector<RunRecord> runs;
    std::vector<SummaryRow> summary;
    std::vector<SlopeFit> slopes;
    double median_slope_fixed = kNaN;
    double median_slope_adapt = kNaN;
    double median_slope_baseline = kNaN;
};

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Fixed lambda = eps (1 - gamma) / (2 C) per target, AdaptReduce, optional lambda = 0 baseline.
ComparisonResult run_comparison(const ExperimentConfig& cfg);

/// One AdaptReduce run per schedule with identical budgets.
ComparisonResult schedule_sweep(const ExperimentConfig& cfg);

struct DualityReport {
    std::vector<double> grid;
    std::vector<double> values;  ///< max_pi J(pi, lambda) per grid point
    double min_value = 0.0;
    double argmin_lambda = 0.0;
    double unregularized = 0.0;  ///< J(pi*, 0)
    double worst_monotone_slack = 0.0;
    bool monotone = true;
    bool passed = false;
};

/// Requires a nonpositive regularizer and 0 in the grid.
DualityReport verify_strong_duality(const TabularMdp& mdp, const Regularizer& reg, std::span<const double> grid,
                                    double tolerance, const NumericConfig& cfg = default_config());

} // namespace rmdp
