#include "lmprl/lmp_filter.hpp"

#include <cmath>
#include <string>

namespace lmprl {

FilterState::FilterState(Vector theta, double rho) : theta_(std::move(theta)), rho_(rho) {
    if (theta_.size() == 0) throw std::invalid_argument("FilterState: filter order must be positive");
    if (!(rho_ > 0.0)) throw std::invalid_argument("FilterState: rho must be positive");
}

FilterState::FilterState(Eigen::Index order, double rho)
    : FilterState(order > 0 ? Vector::Zero(order) : Vector(), rho) {}

double prior_error(const FilterState& state, const Vector& x, double y) {
    if (x.size() != state.order())
        throw std::invalid_argument("prior_error: input has dimension " + std::to_string(x.size()) +
                                    ", filter order is " + std::to_string(state.order()));
    return y - state.theta().dot(x);
}

FilterState lmp_step(const FilterState& state, const Vector& x, double y, double p) {
    if (!(p >= 1.0 && p <= 2.0)) throw std::domain_error("lmp_step: p must lie in [1, 2]");
    if (!x.allFinite() || !std::isfinite(y)) throw non_finite_input("lmp_step: non-finite input sample");
    const double e = prior_error(state, x, y);
    if (!std::isfinite(e)) throw non_finite_input("lmp_step: non-finite prior error");
    if (e == 0.0) return state;

    const double sign = e > 0.0 ? 1.0 : -1.0;
    const double gain = state.rho() * p * sign * std::pow(std::abs(e), p - 1.0);
    return FilterState(state.theta() + gain * x, state.rho());
}

} // namespace lmprl
