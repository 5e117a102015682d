#include <doctest.h>

#include <cmath>
#include <vector>

#include "lmprl/kbrl.hpp"

using namespace lmprl;

namespace {

StateVector random_state(Rng& rng) {
    std::normal_distribution<double> d;
    return {d(rng), d(rng), d(rng), d(rng)};
}

Vector randn(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

struct Fixture {
    RffMap map = RffMap::draw(100, 1.0, 77);
    ActionGrid grid = ActionGrid::uniform_default();
    Rng rng = make_rng(78);
};

ReplayRecord make_record(Rng& rng, std::size_t n_avg) {
    ReplayRecord r;
    r.s = random_state(rng);
    r.a = 1.5;
    r.g = std::normal_distribution<double>(-1.0, 0.5)(rng);
    for (std::size_t j = 0; j < n_avg; ++j) r.avg.push_back(random_state(rng));
    return r;
}

} // namespace

TEST_CASE("action grid validation") {
    CHECK_THROWS_AS(ActionGrid({}), std::invalid_argument);
    CHECK_THROWS_AS(ActionGrid({0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ActionGrid({1.5, 1.2}), std::invalid_argument);
    CHECK_THROWS_AS(ActionGrid({1.0, 2.1}), std::invalid_argument);
    CHECK(ActionGrid::uniform_default().contains(1.75));
    CHECK_FALSE(ActionGrid::uniform_default().contains(1.6));
}

TEST_CASE("q value is linear") {
    Fixture f;
    const StateAction z{random_state(f.rng), 1.25};
    CHECK(q_value(QFunction::zero(100), f.map, z) == 0.0);
    const Vector w1 = randn(100, f.rng), w2 = randn(100, f.rng);
    CHECK(q_value({w1 + w2}, f.map, z) ==
          doctest::Approx(q_value({w1}, f.map, z) + q_value({w2}, f.map, z)).epsilon(1e-12));
    CHECK(q_value({f.map.features(z)}, f.map, z) <= 2.0 + 1e-12);
}

TEST_CASE("greedy action ties and ordering") {
    Fixture f;
    const StateVector s = random_state(f.rng);
    CHECK(greedy_action(QFunction::zero(100), f.map, s, f.grid) == 1.0);

    // A map with one feature whose value is a chosen function of p alone.
    RffMap::Frequencies v = RffMap::Frequencies::Zero(1, kStateActionDim);
    v(0, 4) = 1.0;
    const RffMap one(v, Vector::Constant(1, 0.0), 1.0);
    // cos(p) decreases on [1, 2], so Q = -cos(p) is smallest at p = 1 and w = 1
    // puts the minimum at p = 2.
    CHECK(greedy_action({Vector::Constant(1, 1.0)}, one, s, f.grid) == 2.0);
    CHECK(greedy_action({Vector::Constant(1, -1.0)}, one, s, f.grid) == 1.0);

    const Vector w = randn(100, f.rng);
    const double a = greedy_action({w}, f.map, s, f.grid);
    CHECK(greedy_action({3.5 * w}, f.map, s, f.grid) == a);
}

TEST_CASE("fast action table agrees with direct evaluation") {
    Fixture f;
    const ActionFeatures table(f.map, f.grid);
    for (int t = 0; t < 50; ++t) {
        const StateVector s = random_state(f.rng);
        const Vector w = randn(100, f.rng);
        const StateProjection proj = f.map.project(s);
        for (std::size_t k = 0; k < f.grid.size(); ++k) {
            const Vector direct = f.map.features(StateAction{s, f.grid[k]});
            CHECK((table.feature(proj, k) - direct).cwiseAbs().maxCoeff() < 1e-12);
        }
        CHECK(f.grid[table.greedy_index(w, proj)] == greedy_action({w}, f.map, s, f.grid));
    }
}

TEST_CASE("averaging states re-use past pairs") {
    FeatureConfig cfg;
    DataWindow w(10);
    Vector x(2);
    x << 1.0, 2.0;
    for (int i = 0; i < 4; ++i) w.push(x * (i + 1), 3.0 * i);
    const StateVector current{0.1, -0.7, 0.3, 1.9};
    Vector theta(2);
    theta << 0.5, -0.25;
    const AveragingStates avg = generate_avg_states(w, theta, current, 3, cfg);
    REQUIRE(avg.size() == 3);
    const auto& newest = w.recent(0);
    CHECK(avg[0].s1 == std::log10(std::abs(newest.y - theta.dot(newest.x))));
    CHECK(avg[0].s3 == std::log10(newest.x_norm));
    for (const auto& s : avg) {
        CHECK(s.s2 == current.s2);
        CHECK(s.s4 == current.s4);
    }
    CHECK(generate_avg_states(w, theta, current, 1, cfg).size() == 1);
    CHECK(generate_avg_states(w, theta, current, 50, cfg).size() == 4);

    DataWindow same(10);
    for (int i = 0; i < 5; ++i) same.push(x, 1.0);
    const AveragingStates flat = generate_avg_states(same, theta, current, 5, cfg);
    for (const auto& s : flat) CHECK(s == flat.front());
}

TEST_CASE("hyperplane vector") {
    Fixture f;
    const StateAction z{random_state(f.rng), 1.5};
    AveragingStates avg{random_state(f.rng), random_state(f.rng)};
    std::vector<double> mu{1.0, 2.0};
    CHECK(build_h(f.map, z, avg, mu, 0.0) == f.map.features(z));

    const AveragingStates self{z.s};
    const std::vector<double> self_mu{z.a};
    CHECK((build_h(f.map, z, self, self_mu, 0.75) - 0.25 * f.map.features(z)).norm() < 1e-14);

    for (int t = 0; t < 20; ++t) {
        AveragingStates many;
        std::vector<double> acts;
        for (int j = 0; j < 10; ++j) {
            many.push_back(random_state(f.rng));
            acts.push_back(f.grid[static_cast<std::size_t>(j) % f.grid.size()]);
        }
        CHECK(build_h(f.map, z, many, acts, 0.75).norm() <= 1.75 * std::sqrt(2.0) + 1e-12);
    }
    CHECK_THROWS(build_h(f.map, z, AveragingStates{}, std::vector<double>{}, 0.75));
    CHECK_THROWS(build_h(f.map, z, avg, std::vector<double>{1.0}, 0.75));
}

TEST_CASE("q update") {
    Vector e = Vector::Zero(6);
    e(2) = 1.0;
    const QFunction q1 = q_update(QFunction::zero(6), e, 1.0, 0.5);
    CHECK(q1.w == 0.5 * e);

    Rng rng = make_rng(4);
    for (int t = 0; t < 100; ++t) {
        const Vector w = randn(30, rng), h = randn(30, rng) * 0.2;
        const double g = std::normal_distribution<double>()(rng);
        const double eta = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
        const double r = w.dot(h) - g;
        const QFunction q2 = q_update({w}, h, g, eta);
        CHECK(q2.w.dot(h) - g == doctest::Approx((1.0 - eta * h.squaredNorm()) * r).epsilon(1e-9));
        // landing on the hyperplane
        const QFunction q3 = q_update({w}, h, g, 1.0 / h.squaredNorm());
        CHECK(std::abs(q3.w.dot(h) - g) <= 1e-10);
        // fixed point
        CHECK(q_update(q3, h, q3.w.dot(h), eta).w == q3.w);
    }
    CHECK_THROWS(q_update(QFunction::zero(6), e, 1.0, 0.0));
}

TEST_CASE("replay buffer") {
    ReplayConfig cfg;
    cfg.capacity = 3;
    ReplayBuffer buf(cfg);
    Rng rng = make_rng(5);
    CHECK(buf.sample(4, rng).empty());
    buf.push(make_record(rng, 2));
    CHECK(buf[0].priority == 1.0);
    buf[0].priority = 4.0;
    buf.push(make_record(rng, 2));
    CHECK(buf[1].priority == 4.0);
    for (int i = 0; i < 5; ++i) buf.push(make_record(rng, 2));
    CHECK(buf.size() == 3);

    // sampling follows priority^0.6 + 1e-6
    ReplayBuffer two;
    two.push(make_record(rng, 1));
    two.push(make_record(rng, 1));
    two[0].priority = 1.0;
    two[1].priority = 0.0;
    const auto idx = two.sample(2000, rng);
    std::size_t zeros = 0;
    for (auto i : idx) zeros += i == 1;
    CHECK(zeros < 5);

    ReplayConfig bad;
    bad.capacity = 0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("replay pass") {
    Fixture f;
    ReplayBuffer empty;
    const QFunction q0{randn(100, f.rng)};
    CHECK(replay_pass(q0, empty, f.map, f.grid, 0.75, 0.5, f.rng).w == q0.w);

    // one record already on its hyperplane stays put
    ReplayConfig one_cfg;
    one_cfg.per_step = 1;
    ReplayBuffer one(one_cfg);
    ReplayRecord rec = make_record(f.rng, 3);
    std::vector<double> mu;
    for (const auto& s : rec.avg) mu.push_back(greedy_action(q0, f.map, s, f.grid));
    rec.g = q0.w.dot(build_h(f.map, {rec.s, rec.a}, rec.avg, mu, 0.75));
    one.push(rec);
    CHECK((replay_pass(q0, one, f.map, f.grid, 0.75, 0.5, f.rng).w - q0.w).norm() < 1e-12);

    // seeded, and the cached path matches the direct one
    ReplayBuffer a, b;
    for (int i = 0; i < 40; ++i) {
        ReplayRecord r = make_record(f.rng, 10);
        a.push(r);
        r.phi_z = f.map.features(StateAction{r.s, r.a});
        for (const auto& s : r.avg) r.avg_proj.push_back(f.map.project(s));
        b.push(r);
    }
    ReplayBuffer a2 = a;
    const ActionFeatures table(f.map, f.grid);
    Rng r1 = make_rng(9), r2 = make_rng(9), r3 = make_rng(9);
    QFunction qa = q0, qb = q0, qc = q0;
    for (int step = 0; step < 20; ++step) {
        qa = replay_pass(qa, a, f.map, f.grid, 0.75, 0.5, r1);
        qb = replay_pass(qb, b, f.map, table, 0.75, 0.5, r2);
        qc = replay_pass(qc, a2, f.map, f.grid, 0.75, 0.5, r3);
    }
    CHECK(qa.w == qc.w);
    CHECK((qa.w - qb.w).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(qa.w != q0.w);
}

TEST_CASE("bellman map") {
    Fixture f;
    const StateAction z{random_state(f.rng), 1.75};
    AveragingStates avg;
    std::vector<double> mu;
    for (int j = 0; j < 10; ++j) {
        avg.push_back(random_state(f.rng));
        mu.push_back(f.grid[static_cast<std::size_t>(j) % 5]);
    }
    const Vector wg = randn(100, f.rng);
    const BellmanMap t(f.map, z, avg, mu, 0.6, wg);

    // psi columns are the minimum-norm solutions of psi^T phi(z) = 1/N
    const Vector phi = f.map.features(z);
    for (Eigen::Index j = 0; j < t.psi().cols(); ++j) CHECK(t.psi().col(j).dot(phi) == doctest::Approx(0.1));

    // affine: T(a w + (1-a) w') = a T w + (1-a) T w'
    for (int k = 0; k < 20; ++k) {
        const Vector w1 = randn(100, f.rng), w2 = randn(100, f.rng);
        const double a = std::uniform_real_distribution<double>(-2.0, 2.0)(f.rng);
        const Vector lhs = t.apply(a * w1 + (1 - a) * w2);
        const Vector rhs = a * t.apply(w1) + (1 - a) * t.apply(w2);
        CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    // constant map when alpha = 0
    const NonexpansiveReport zero = check_nonexpansive(f.map, avg, mu, 0.0, z, 50, 1);
    CHECK(zero.passed);
    CHECK(zero.worst_ratio == 0.0);

    const double bound = t.alpha_bound();
    const NonexpansiveReport at = check_nonexpansive(f.map, avg, mu, bound, z, 1000, 2);
    CHECK(at.alpha_within_bound);
    CHECK(at.passed);
    CHECK(at.worst_ratio <= 1.0 + 1e-9);

    // Ten times the bound, with w - w' along the top right singular vector of
    // the linear part: the ratio is the operator norm and exceeds one here.
    const BellmanMap big(f.map, z, avg, mu, 10.0 * bound, Vector::Zero(100));
    const Eigen::MatrixXd lin = big.alpha() * big.psi() * big.phi_avg().transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lin, Eigen::ComputeThinV);
    const Vector dir = svd.matrixV().col(0);
    const double ratio = (big.apply(dir) - big.apply(Vector::Zero(100))).norm() / dir.norm();
    MESSAGE("adversarial ratio at 10x bound: " << ratio);
    CHECK(ratio > 1.0);
    CHECK(ratio == doctest::Approx(big.lipschitz_constant()).epsilon(1e-9));
    CHECK_FALSE(check_nonexpansive(f.map, avg, mu, 10.0 * bound, z, 10, 3).alpha_within_bound);
}
