#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lmprl/api_agent.hpp"
#include "lmprl/baselines.hpp"
#include "lmprl/environment.hpp"

namespace lmprl {

/// Raised for malformed or inconsistent run configurations.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name;
    NoiseKind noise = NoiseKind::alpha_stable;
    AlphaStableParams stable;
    SparseParams sparse;
};

using MethodKind = std::variant<ApiConfig, FixedP, RandomP, KernelTd0>;

struct MethodSpec {
    std::string name;
    MethodKind kind;
};

struct RunSpec {
    ExperimentConfig experiment; ///< noise fields are taken from each scenario
    std::vector<Scenario> scenarios;
    std::vector<MethodSpec> methods;
    FeatureConfig features;
    ActionGrid grid = ActionGrid::uniform_default();
    std::size_t trials = 100;
    std::uint64_t master_seed = 1;
    std::filesystem::path out_dir = "out";
    bool write_trials = false;
    bool dump_rff = true;

    void validate() const;

    /// split(split(master, scenario), trial); the environment takes child 0
    /// and method m takes child m + 1.
    std::uint64_t trial_seed(std::size_t scenario, std::size_t trial) const;

    /// Experiment configuration of one scenario and trial, with its seed.
    ExperimentConfig experiment_for(std::size_t scenario, std::size_t trial) const;
};

/// L = 100, rho = 1e-3, 40000 steps with a change at 20000, 100 trials,
/// M_av = 300, varpi = 0.3, both outlier scenarios, the policy-iteration agent
/// (N_av = 10, alpha = 0.75, eta = 0.5, sigma = 2, counterfactual updates and
/// replay),
/// fixed p on the grid, random p and TD(0).
RunSpec full_scale_spec();

RunSpec run_spec_from_json(const nlohmann::json& j);
nlohmann::json run_spec_to_json(const RunSpec& spec);
RunSpec load_run_spec(const std::filesystem::path& path);

/// 20 log10(max(||theta - theta*||, 1e-12) / ||theta*||).
double normalized_deviation(const Vector& theta, const Vector& theta_star);

struct TrialResult {
    Eigen::MatrixXd deviation_db; ///< steps x methods
    nlohmann::json rff_maps = nlohmann::json::array();
};

/// Runs every method of the spec in lockstep on one trial's data stream.
TrialResult run_trial(const RunSpec& spec, std::size_t scenario, std::size_t trial);

enum class Execution { serial, parallel };

struct ScenarioResult {
    std::string scenario;
    std::vector<std::string> methods;
    Eigen::MatrixXd mean_db;                  ///< steps x methods
    std::vector<Eigen::MatrixXd> trials_db;   ///< filled when spec.write_trials
    nlohmann::json rff_maps = nlohmann::json::array();
};

/// Runs all trials of one scenario. Trials are folded into the mean in trial
/// order regardless of execution mode, so both modes give identical bits.
ScenarioResult run_scenario(const RunSpec& spec, std::size_t scenario, Execution mode = Execution::parallel);

/// CSV with header `step,method,mean_dev_db[,trial_0,...]`, one row per
/// (method, step), methods in spec order.
void write_scenario_csv(const ScenarioResult& result, const std::filesystem::path& path);

/// Runs every scenario and writes `<out>/<scenario>.csv` and, when enabled,
/// `<out>/<scenario>_rff.json`. Returns the written paths.
std::vector<std::filesystem::path> run(const RunSpec& spec, Execution mode = Execution::parallel);

} // namespace lmprl
