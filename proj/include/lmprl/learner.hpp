#pragma once

#include <cstddef>

#include "lmprl/lmp_filter.hpp"
#include "lmprl/state_features.hpp"

namespace lmprl {

/// An LMP filter paired with a rule for choosing p at every step.
class Learner {
public:
    virtual ~Learner() = default;

    /// Consumes one sample, updates the filter and returns the p that was used.
    virtual double step(const Vector& x, double y) = 0;

    virtual const Vector& theta() const = 0;
};

/// Filter, data window and state recursion shared by the learners that observe
/// the RL state. Call `observe` with the new pair, then `advance` with the
/// chosen p; `advance` returns the one-step loss of the update.
class StateTracker {
public:
    StateTracker(Eigen::Index order, double rho, FeatureConfig cfg, std::size_t min_window = 0);

    /// State at the current step. At the first step s4 comes from initial_s4
    /// with `first_p`, the p that will be applied.
    const StateVector& observe(const Vector& x, double y, double first_p);

    /// Applies the LMP update with p, pushes the pair into the window and
    /// returns the one-step loss under the updated estimate.
    double advance(double p);

    const FilterState& filter() const noexcept { return filter_; }
    const Vector& theta_prev() const noexcept { return theta_prev_; }
    const DataWindow& window() const noexcept { return window_; }
    const StateVector& state() const noexcept { return state_; }
    const FeatureConfig& config() const noexcept { return cfg_; }
    std::size_t steps() const noexcept { return n_; }

private:
    FeatureConfig cfg_;
    FilterState filter_;
    Vector theta_prev_;
    DataWindow window_;
    StateVector state_;
    Vector x_;
    double y_ = 0.0;
    std::size_t n_ = 0;
};

} // namespace lmprl
