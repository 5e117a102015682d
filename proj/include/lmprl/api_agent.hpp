#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lmprl/kbrl.hpp"
#include "lmprl/learner.hpp"

namespace lmprl {

enum class BandwidthRule {
    fixed,  ///< use ApiConfig::sigma
    median, ///< median pairwise distance of the first warm-up state-action points
};

struct ApiConfig {
    std::size_t n_avg = 10;
    double alpha = 0.75;
    double eta = 0.5;
    Eigen::Index features = 300;
    double sigma = 1.0;
    BandwidthRule bandwidth = BandwidthRule::fixed;
    std::size_t warmup = 200; ///< points collected for the median rule
    ReplayConfig replay;
    double initial_p = 2.0;   ///< constant initial policy
    /// Epsilon-greedy exploration, decayed multiplicatively per step toward
    /// epsilon_end. Zero keeps the policy purely greedy.
    double epsilon_start = 0.0;
    double epsilon_end = 0.0;
    double epsilon_decay = 1.0;
    /// Also update Q at (s_n, p) for every other grid p, using the loss that p
    /// would have produced on the current pair.
    bool counterfactual = false;
    /// Store the counterfactual records in the replay buffer as well.
    bool replay_counterfactual = false;

    void validate() const;
};

/// Everything computed in the most recent step, kept for inspection.
struct StepTrace {
    StateVector s;
    double a = 2.0;
    double g = 0.0;
    AveragingStates avg;
    std::vector<double> mu;
    Vector h;
    double residual = 0.0; ///< w^T h - g before the policy-evaluation update
    bool learned = false;
};

/// Approximate policy iteration for choosing p online. Per sample:
///   state -> greedy p -> LMP update -> averaging states from past data
///   -> prioritized replay -> steepest-descent Q update toward the hyperplane
///      {w : w^T h = g}.
class ApiAgent final : public Learner {
public:
    ApiAgent(Eigen::Index order, double rho, FeatureConfig features, ActionGrid grid, ApiConfig cfg,
             std::uint64_t seed);

    double step(const Vector& x, double y) override;
    const Vector& theta() const override { return tracker_.filter().theta(); }

    const QFunction& q() const noexcept { return q_; }
    /// Empty until the warm-up of the median bandwidth rule has finished.
    const std::optional<RffMap>& map() const noexcept { return map_; }
    const StepTrace& last() const noexcept { return trace_; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }
    const ApiConfig& config() const noexcept { return cfg_; }

private:
    struct Record {
        Vector phi_z;
        Vector h;
        std::vector<double> mu;
        std::vector<StateProjection> avg_proj;
    };

    void build_map(double sigma);
    Record evaluate(double a, const StateProjection& proj, const AveragingStates& avg) const;
    std::size_t grid_index(double a) const;

    ApiConfig cfg_;
    ActionGrid grid_;
    StateTracker tracker_;
    std::uint64_t map_seed_;
    Rng replay_rng_;
    Rng explore_rng_;
    double epsilon_;
    std::optional<RffMap> map_;
    std::optional<ActionFeatures> table_;
    QFunction q_;
    ReplayBuffer buffer_;
    std::vector<StateAction> warmup_points_;
    StepTrace trace_;
};

} // namespace lmprl
