#include "lmprl/learner.hpp"

#include <algorithm>

namespace lmprl {

StateTracker::StateTracker(Eigen::Index order, double rho, FeatureConfig cfg, std::size_t min_window)
    : cfg_(cfg),
      filter_(order, rho),
      theta_prev_(Vector::Zero(order)),
      window_((cfg.validate(), std::max(cfg.window, min_window))) {}

const StateVector& StateTracker::observe(const Vector& x, double y, double first_p) {
    x_ = x;
    y_ = y;
    const double prev_s4 = state_.s4;
    state_ = compute_state(window_, filter_.theta(), theta_prev_, x, y, prev_s4, cfg_, filter_.rho());
    if (n_ == 0) state_.s4 = initial_s4(first_p, state_.s1, state_.s3);
    return state_;
}

double StateTracker::advance(double p) {
    FilterState next = lmp_step(filter_, x_, y_, p);
    theta_prev_ = filter_.theta();
    filter_ = std::move(next);
    window_.push(x_, y_);
    ++n_;
    return one_step_loss(window_, filter_.theta(), cfg_);
}

} // namespace lmprl
