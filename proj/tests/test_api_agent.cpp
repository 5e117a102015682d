#include <doctest.h>

#include <algorithm>

#include "lmprl/api_agent.hpp"
#include "lmprl/environment.hpp"

using namespace lmprl;

namespace {

ExperimentConfig small_stream(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.order = 6;
    cfg.total_steps = 400;
    cfg.change_step = 200;
    cfg.seed = seed;
    return cfg;
}

FeatureConfig small_features() {
    FeatureConfig f;
    f.window = 30;
    return f;
}

} // namespace

TEST_CASE("agent step bookkeeping") {
    ApiConfig cfg;
    cfg.features = 64;
    ApiAgent agent(6, 1e-3, small_features(), ActionGrid::uniform_default(), cfg, 5);
    Environment env(small_stream(1));
    const ActionGrid grid = ActionGrid::uniform_default();
    double prev_g = 0.0;
    for (int n = 0; n < 120; ++n) {
        const StreamSample s = env.next();
        const double a = agent.step(s.x, s.y);
        CHECK(grid.contains(a));
        const StepTrace& t = agent.last();
        if (n == 0) CHECK(a == cfg.initial_p);
        CHECK(t.learned);
        CHECK(t.avg.size() == std::min<std::size_t>(cfg.n_avg, static_cast<std::size_t>(n + 1)));
        CHECK(t.mu.size() == t.avg.size());
        // the stored loss is the next state's s2
        if (n > 0) CHECK(t.s.s2 == prev_g);
        prev_g = t.g;
    }
    CHECK(agent.buffer().size() == 120);
    CHECK_FALSE(agent.q().w.isZero(0.0));
}

TEST_CASE("agent is deterministic for a seed") {
    ApiConfig cfg;
    cfg.features = 64;
    cfg.epsilon_start = 0.1;
    cfg.epsilon_end = 0.01;
    cfg.epsilon_decay = 0.99;
    ApiAgent a(6, 1e-3, small_features(), ActionGrid::uniform_default(), cfg, 5);
    ApiAgent b(6, 1e-3, small_features(), ActionGrid::uniform_default(), cfg, 5);
    Environment env(small_stream(2));
    for (int n = 0; n < 200; ++n) {
        const StreamSample s = env.next();
        CHECK(a.step(s.x, s.y) == b.step(s.x, s.y));
    }
    CHECK(a.q().w == b.q().w);
    CHECK(a.theta() == b.theta());
}

TEST_CASE("median bandwidth warm-up") {
    ApiConfig cfg;
    cfg.features = 32;
    cfg.bandwidth = BandwidthRule::median;
    cfg.warmup = 50;
    ApiAgent agent(6, 1e-3, small_features(), ActionGrid::uniform_default(), cfg, 8);
    Environment env(small_stream(3));
    for (int n = 0; n < 50; ++n) {
        const StreamSample s = env.next();
        CHECK(agent.step(s.x, s.y) == cfg.initial_p);
        CHECK_FALSE(agent.last().learned);
    }
    REQUIRE(agent.map().has_value());
    CHECK(agent.map()->sigma() > 0.0);
    const StreamSample s = env.next();
    agent.step(s.x, s.y);
    CHECK(agent.last().learned);
}

TEST_CASE("agent config validation") {
    ApiConfig c;
    c.alpha = 1.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.eta = 0.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.epsilon_start = 0.1;
    c.epsilon_end = 0.2;
    CHECK_THROWS(c.validate());
    c = {};
    c.n_avg = 0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("counterfactual updates use the loss each p would have produced") {
    ApiConfig plain;
    plain.features = 64;
    ApiConfig cf = plain;
    cf.counterfactual = true;
    ApiAgent a(6, 1e-3, small_features(), ActionGrid::uniform_default(), plain, 5);
    ApiAgent b(6, 1e-3, small_features(), ActionGrid::uniform_default(), cf, 5);
    Environment env(small_stream(4));
    // Same first step: p = 2 is applied by both, so the filters agree.
    const StreamSample s = env.next();
    CHECK(a.step(s.x, s.y) == b.step(s.x, s.y));
    CHECK(a.theta() == b.theta());
    CHECK(a.last().g == b.last().g);
    CHECK(a.q().w != b.q().w);
    CHECK(b.buffer().size() == 1);

    // Replaying the agent's reasoning by hand for the first step: after the
    // executed update, each other p moves w toward its own hyperplane.
    ApiAgent c(6, 1e-3, small_features(), ActionGrid::uniform_default(), cf, 6);
    Environment env2(small_stream(5));
    const StreamSample t = env2.next();
    c.step(t.x, t.y);
    FilterState zero(6, 1e-3);
    DataWindow window(small_features().window);
    window.push(t.x, t.y);
    const RffMap& map = *c.map();
    const ActionGrid grid = ActionGrid::uniform_default();
    const StateVector st = c.last().s;
    QFunction q = QFunction::zero(64);
    auto learn = [&](double p) {
        const Vector next = lmp_step(zero, t.x, t.y, p).theta();
        const double g = one_step_loss(window, next, small_features());
        const AveragingStates avg = generate_avg_states(window, next, st, plain.n_avg, small_features());
        std::vector<double> mu;
        for (const auto& sa : avg) mu.push_back(greedy_action(q, map, sa, grid));
        q = q_update(q, build_h(map, {st, p}, avg, mu, plain.alpha), g, plain.eta);
    };
    learn(2.0);
    for (double p : {1.0, 1.25, 1.5, 1.75}) learn(p);
    CHECK((q.w - c.q().w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("counterfactual records can enter the replay buffer") {
    ApiConfig cfg;
    cfg.features = 32;
    cfg.counterfactual = true;
    cfg.replay_counterfactual = true;
    ApiAgent agent(6, 1e-3, small_features(), ActionGrid::uniform_default(), cfg, 9);
    Environment env(small_stream(6));
    for (int n = 0; n < 3; ++n) {
        const StreamSample s = env.next();
        agent.step(s.x, s.y);
    }
    REQUIRE(agent.buffer().size() == 15);
    // the other grid values in order, then the executed record
    CHECK(agent.buffer()[14].a == agent.last().a);
    CHECK(agent.buffer()[14].g == agent.last().g);
    std::vector<double> rest;
    for (std::size_t i = 10; i < 14; ++i) rest.push_back(agent.buffer()[i].a);
    CHECK(std::is_sorted(rest.begin(), rest.end()));
    CHECK(std::find(rest.begin(), rest.end(), agent.last().a) == rest.end());
}
