#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace lmprl {

using Vector = Eigen::VectorXd;

/// Raised when a filter update receives a NaN or infinite value.
class non_finite_input : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Least-mean-p-power adaptive filter state: the estimate and its step size.
class FilterState {
public:
    FilterState(Vector theta, double rho);
    FilterState(Eigen::Index order, double rho);

    const Vector& theta() const noexcept { return theta_; }
    double rho() const noexcept { return rho_; }
    Eigen::Index order() const noexcept { return theta_.size(); }

private:
    Vector theta_;
    double rho_;
};

/// e = y - theta^T x.
double prior_error(const FilterState& state, const Vector& x, double y);

/// One LMP update with exponent p in [1, 2]:
///   theta' = theta + rho * p * sign(e) * |e|^(p-1) * x,  sign(0) = 0.
/// p = 2 is LMS (theta + 2 rho e x), p = 1 is sign-LMS.
FilterState lmp_step(const FilterState& state, const Vector& x, double y, double p);

} // namespace lmprl
