#pragma once

#include "gradnoise/estimators.hpp"
#include "gradnoise/integrator.hpp"
#include "gradnoise/model.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradnoise {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scenario {
    single_run,
    eps_sweep,
    power_sweep,
    verify_identities,
    martingale_check,
    ou_control
};

std::string scenario_name(Scenario s);

struct ExperimentPlan {
    Scenario scenario = Scenario::single_run;
    ModelConfig base;
    std::vector<double> eps_grid; // strictly decreasing, sweeps only
    int trajectories = 200;
    std::uint64_t master_seed = 0;
    std::string output_dir = ".";
    int workers = 0; // 0 = hardware concurrency
};

/// Default desk-scale profile: n=2, m=33, N=128, nu=0.1, T=0.5,
/// psi0 = sin x + 0.5 cos 2x, 200 trajectories, eps grid (0.4,0.2,0.1).
ExperimentPlan default_profile();

struct Violation {
    std::string hypothesis;
    std::string detail;
};

/// Checks the standing hypotheses a scenario relies on: dissipativity
/// of the multipliers, A*(1)=0 for mean-conservation scenarios, kappa>0
/// plus the tail condition for bounded-noise sweeps, gamma>1 for the
/// power family, and the resolution/oversampling rules. Violations are
/// data, not errors.
std::vector<Violation> validate_config(const ModelConfig& cfg, Scenario scenario);
std::vector<Violation> validate_plan(const ExperimentPlan& plan);

/// Runs `count` trajectories seeded (master_seed, 0..count-1) on a
/// bounded worker pool. Results come back indexed by trajectory, so
/// downstream reductions are independent of scheduling.
std::vector<TrajectoryResult> run_ensemble(const ModelConfig& cfg, int count,
                                           std::uint64_t master_seed, int workers);

struct IdentityRow {
    std::string name;
    double computed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ScalingRow {
    double eps = 0.0;
    double I = 0.0;
    double ci_half = 0.0;
};

struct ResultRecord {
    Scenario scenario = Scenario::single_run;
    double wall_seconds = 0.0;
    int trajectories_completed = 0;
    int trajectories_failed = 0;
    bool pass = true;
    std::vector<IdentityRow> identities;
    std::vector<ScalingRow> scaling;
    ScalingFit fit;
    MartingaleStats martingale;
    EnergyBalance balance;
    std::vector<std::string> files_written;
};

/// Executes the scenario and writes its tables under plan.output_dir
/// (CSV bodies are byte-identical across reruns of the same plan; the
/// run_meta.txt sidecar carries the timestamp and config echo).
/// Throws config_error if validate_plan reports violations.
ResultRecord run_plan(const ExperimentPlan& plan);

/// The deterministic identity suite behind the verify scenario.
std::vector<IdentityRow> identity_suite();

/// Terminal-state L2 gap between the Ito integrating-factor scheme and
/// the Stratonovich midpoint scheme, both driven by one Brownian path
/// (coarse increments are sums of the finest ones), across `levels`
/// successive halvings of dt. order is the fitted log-log decay rate of
/// the RMS gap; agreement validates the correction constant c_Q.
struct ConsistencyResult {
    std::vector<double> dts;
    std::vector<double> rms_gap;
    double order = 0.0;
};

ConsistencyResult scheme_consistency_study(const ModelConfig& base, int levels, int n_traj,
                                           std::uint64_t master_seed);

/// Flat key=value configuration text ('#' comments). Unknown keys are
/// rejected so typos surface as config errors.
std::map<std::string, std::string> load_config_file(const std::string& path);
void apply_config(ExperimentPlan& plan, const std::map<std::string, std::string>& kv);

/// Initial-condition expressions: terms joined by +/-, each an optional
/// coefficient times sin(k), cos(k) or const, e.g. "sin(1)+0.5*cos(2)".
SpectralField parse_initial_field(const std::string& expr);

} // namespace gradnoise
