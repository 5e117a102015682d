#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "lmprl/kbrl.hpp"
#include "lmprl/learner.hpp"

namespace lmprl {

struct FixedP {
    double p = 2.0;
};

struct RandomP {};

/// Semi-gradient TD(0) on the same state, action grid, one-step loss and
/// random features as the policy-iteration agent, with uniform replay and
/// epsilon-greedy exploration:
///   w <- w + eta (g + alpha min_a' w^T phi(s', a') - w^T phi(s, a)) phi(s, a)
/// A reconstruction for comparison purposes.
struct KernelTd0 {
    double alpha = 0.9;
    double eta = 0.1;
    Eigen::Index features = 300;
    double sigma = 1.0;
    double epsilon_start = 0.1;
    double epsilon_end = 0.01;
    double epsilon_decay = 0.999; ///< per-step multiplicative decay
    std::size_t replay_capacity = 500;
    std::size_t replay_per_step = 5;

    void validate() const;
};

using BaselineKind = std::variant<FixedP, RandomP, KernelTd0>;

class FixedPLearner final : public Learner {
public:
    FixedPLearner(Eigen::Index order, double rho, double p);

    double step(const Vector& x, double y) override;
    const Vector& theta() const override { return filter_.theta(); }

private:
    FilterState filter_;
    double p_;
};

class RandomPLearner final : public Learner {
public:
    RandomPLearner(Eigen::Index order, double rho, ActionGrid grid, std::uint64_t seed);

    double step(const Vector& x, double y) override;
    const Vector& theta() const override { return filter_.theta(); }

private:
    FilterState filter_;
    ActionGrid grid_;
    Rng rng_;
};

class KernelTd0Learner final : public Learner {
public:
    KernelTd0Learner(Eigen::Index order, double rho, FeatureConfig features, ActionGrid grid, KernelTd0 cfg,
                     std::uint64_t seed);

    double step(const Vector& x, double y) override;
    const Vector& theta() const override { return tracker_.filter().theta(); }

    const QFunction& q() const noexcept { return q_; }
    const RffMap& map() const noexcept { return map_; }
    double epsilon() const noexcept { return epsilon_; }

private:
    struct Transition {
        Vector phi;             // features of (s, a)
        StateProjection next;   // projection of s'
        double g = 0.0;
    };

    void td_update(const Vector& phi, const StateProjection& next, double g);

    KernelTd0 cfg_;
    ActionGrid grid_;
    StateTracker tracker_;
    RffMap map_;
    ActionFeatures table_;
    QFunction q_;
    Rng rng_;
    double epsilon_;
    std::vector<Transition> replay_;
    std::size_t replay_head_ = 0;
    std::optional<Vector> pending_phi_;
    double pending_g_ = 0.0;
};

/// Builds the learner for a baseline kind; `seed` feeds its private RNG streams.
std::unique_ptr<Learner> make_baseline(const BaselineKind& kind, Eigen::Index order, double rho,
                                       const FeatureConfig& features, const ActionGrid& grid,
                                       std::uint64_t seed);

} // namespace lmprl
