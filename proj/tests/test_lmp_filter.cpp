#include <doctest.h>

#include <cmath>
#include <limits>

#include "lmprl/lmp_filter.hpp"
#include "lmprl/rng.hpp"

using namespace lmprl;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

TEST_CASE("prior error") {
    CHECK(prior_error(FilterState(vec({0, 0}), 1e-3), vec({1, 2}), 0.5) == 0.5);
    CHECK(prior_error(FilterState(vec({1, 1}), 1e-3), vec({1, 1}), 2.0) == 0.0);
    CHECK(prior_error(FilterState(vec({0.5}), 1e-3), vec({2}), 0.0) == -1.0);
    CHECK_THROWS_AS(prior_error(FilterState(vec({0, 0}), 1e-3), vec({1}), 0.0), std::invalid_argument);
}

TEST_CASE("lmp step examples") {
    FilterState zero2(2, 1e-3);
    auto lms = lmp_step(zero2, vec({1, 0}), 0.5, 2.0);
    CHECK(lms.theta()(0) == doctest::Approx(0.001).epsilon(1e-14));
    CHECK(lms.theta()(1) == 0.0);

    auto sign = lmp_step(zero2, vec({1, 0}), -0.5, 1.0);
    CHECK(sign.theta()(0) == doctest::Approx(-0.001).epsilon(1e-14));

    // 1e-3 * 1.5 * 0.25^0.5, evaluated by hand
    auto mid = lmp_step(FilterState(1, 1e-3), vec({1}), 0.25, 1.5);
    CHECK(mid.theta()(0) == doctest::Approx(0.00075).epsilon(1e-13));

    FilterState fit(vec({1, 1}), 1e-3);
    for (double p : {1.0, 1.3, 2.0}) CHECK(lmp_step(fit, vec({1, 1}), 2.0, p).theta() == fit.theta());
}

TEST_CASE("lmp step rejects bad input") {
    FilterState f(2, 1e-3);
    CHECK_THROWS_AS(lmp_step(f, vec({1, 0}), 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(lmp_step(f, vec({1, 0}), 1.0, 2.5), std::domain_error);
    CHECK_THROWS_AS(lmp_step(f, vec({1, 0}), std::numeric_limits<double>::quiet_NaN(), 2.0), non_finite_input);
    CHECK_THROWS_AS(lmp_step(f, vec({std::numeric_limits<double>::infinity(), 0}), 1.0, 2.0), non_finite_input);
    CHECK_THROWS_AS(FilterState(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FilterState(0, 1e-3), std::invalid_argument);
}

TEST_CASE("update magnitude follows rho p |e|^(p-1) ||x||") {
    Rng rng = make_rng(11);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> up(1.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        Vector theta(6), x(6);
        for (int i = 0; i < 6; ++i) {
            theta(i) = n01(rng);
            x(i) = n01(rng);
        }
        const double y = n01(rng) * 3.0;
        const double p = up(rng);
        FilterState f(theta, 2e-3);
        const double e = prior_error(f, x, y);
        const double moved = (lmp_step(f, x, y, p).theta() - theta).norm();
        const double expected = 2e-3 * p * std::pow(std::abs(e), p - 1.0) * x.norm();
        CHECK(moved == doctest::Approx(expected).epsilon(1e-10));
    }
}
