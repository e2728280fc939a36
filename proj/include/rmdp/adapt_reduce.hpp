#pragma once

#include "rmdp/bellman.hpp"
#include "rmdp/config.hpp"
#include "rmdp/mdp.hpp"
#include "rmdp/regularizer.hpp"
#include "rmdp/sampling.hpp"
#include "rmdp/trace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rmdp {

enum class PropKind { prop1, prop2 };

/// Sub-solver contract checked after each epoch.
struct StoppingRule {
    PropKind kind = PropKind::prop1;
    double epsilon_hat = 0.0;
    double contraction_factor = 0.25;

    void validate() const;
    friend bool operator==(const StoppingRule&, const StoppingRule&) = default;
};

enum class SolverId { rmpi, pga, softmax_pg, mdpo };
enum class BudgetPolicy { fixed, time_formula, until_certified };
enum class Certification { oracle_gap, theoretical_budget };
enum class GradientMode { exact, sampled };

struct SubSolverBinding {
    SolverId solver = SolverId::rmpi;
    BudgetPolicy budget = BudgetPolicy::fixed;
    std::size_t iterations = 10;  ///< fixed budget, or the cap for until_certified
    Certification certification = Certification::oracle_gap;
    BellmanConfig bellman{};                ///< rmpi
    std::optional<double> step;             ///< pga / softmax_pg / mdpo; nullopt = automatic
    GradientMode gradient = GradientMode::exact;
    SamplingOptions sampling{};             ///< sampled gradients
    SamplingOptions selection{};            ///< best-iterate selection for sampled gradients
    std::uint64_t seed = 0;
    double rho_nu = 0.0;                    ///< time formula input; 0 uses the trivial bound
    double concentrability = 1.0;           ///< RMPI time formula input
    double budget_scale = 1.0;              ///< multiplies the PGA time formula

    void validate() const;
    friend bool operator==(const SubSolverBinding&, const SubSolverBinding&) = default;
};

const char* to_string(SolverId id);
SolverId parse_solver(const std::string& name);
const char* to_string(BudgetPolicy b);
BudgetPolicy parse_budget(const std::string& name);
const char* to_string(Certification c);
Certification parse_certification(const std::string& name);
const char* to_string(PropKind k);
PropKind parse_prop(const std::string& name);

enum class EpochStatus { certified, uncertified, assumed };
const char* to_string(EpochStatus s);

struct EpochRecord {
    std::size_t epoch = 0;
    double lambda = 0.0;
    double gap_before = kNaN;  ///< D_t = V*_lambda(mu) - V_lambda^{pi_t}(mu)
    double gap_after = kNaN;   ///< V*_lambda(mu) - V_lambda^{pi_{t+1}}(mu)
    double target = kNaN;      ///< Prop-II epsilon_t
    std::size_t iterations = 0;
    std::size_t samples = 0;
    EpochStatus status = EpochStatus::uncertified;
};

struct ReductionReport {
    std::vector<EpochRecord> epochs;
    double lambda0 = 0.0;
    double c_phi = 0.0;
    double d0 = kNaN;
    double final_gap = kNaN;            ///< V*(mu) - V^{pi_T}(mu), unregularized
    double epsilon_hat = 0.0;           ///< declared
    double epsilon_hat_measured = 0.0;  ///< max_t (gap_after - allowed)^+
    double bound = kNaN;                ///< Theorem 1 (Prop-I) or Theorem 2 (Prop-II)
    std::size_t total_iterations = 0;
    std::size_t total_samples = 0;
    SolverTrace trace;
};

struct ReductionResult {
    Policy policy;
    ReductionReport report;
};

/// Reported for the initial policy (inner = 0, epoch = 0) and after every inner iteration.
/// Returning false from the observer ends the run after the current epoch's bookkeeping.
struct IterationEvent {
    std::size_t epoch;
    std::size_t inner;
    std::size_t total;
    double lambda;
    const Policy& policy;
    std::size_t samples;
};
using IterationObserver = std::function<bool(const IterationEvent&)>;

/// lambda_t given lambda_0 and t >= 0.
using LambdaSchedule = std::function<double(double lambda0, std::size_t t)>;
/// lambda0 * 2^-t, exact.
double halving_lambda(double lambda0, std::size_t t);

struct ReductionOptions {
    std::optional<Distribution> nu;  ///< objective distribution inside epochs; defaults to mu
    IterationObserver observer;
    NumericConfig numeric = default_config();
};

/**
 * AdaptReduce: epoch t calls the bound sub-solver from pi_t at lambda_t and
 * warm-starts epoch t+1 from its output. Epochs that miss their contract are
 * marked uncertified; the loop never aborts.
 */
ReductionResult adapt_reduce(const TabularMdp& mdp, const Regularizer& reg, double lambda0, const Policy& init,
                             const SubSolverBinding& binding, const StoppingRule& rule, std::size_t epochs,
                             const ReductionOptions& opts = {});

/// Same loop under an arbitrary lambda schedule (halving_lambda reproduces adapt_reduce).
ReductionResult adapt_reduce_scheduled(const TabularMdp& mdp, const Regularizer& reg, double lambda0,
                                       const LambdaSchedule& schedule, const Policy& init,
                                       const SubSolverBinding& binding, const StoppingRule& rule,
                                       std::size_t epochs, const ReductionOptions& opts = {});

/// gap_after <= factor * gap_before + epsilon_hat.
bool prop1_certify(double gap_before, double gap_after, const StoppingRule& rule);
/// lambda0 C / (2^t (1 - gamma))
double prop2_target(double lambda0, double c_phi, double gamma, std::size_t t);
/// ceil(128 |S| rho_nu^2 L (1 - gamma) / (lambda0 C) 2^t)
std::size_t pga_epoch_budget(std::size_t num_states, double rho_nu, double l_lambda_t, double lambda0, double c_phi,
                             double gamma, std::size_t t);
/// ceil(ln(8 C / (1 - gamma)) / ln(1 / gamma)), at least 1.
std::size_t rmpi_epoch_budget(double concentrability, double gamma);
/// D0 / 4^T + (4/3) eps_hat + 6 lambda0 C / ((1 - gamma) 2^T)
double theorem1_bound(double d0, double lambda0, double c_phi, double gamma, double eps_hat, std::size_t epochs);
/// 6 lambda0 C / ((1 - gamma) 2^T) + eps_hat
double theorem2_bound(double lambda0, double c_phi, double gamma, double eps_hat, std::size_t epochs);

} // namespace rmdp
