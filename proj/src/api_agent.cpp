#include "lmprl/api_agent.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace lmprl {

void ApiConfig::validate() const {
    if (n_avg == 0) throw std::invalid_argument("ApiConfig: n_avg must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("ApiConfig: alpha must lie in [0, 1)");
    if (!(eta > 0.0)) throw std::invalid_argument("ApiConfig: eta must be positive");
    if (features <= 0) throw std::invalid_argument("ApiConfig: feature dimension must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("ApiConfig: sigma must be positive");
    if (bandwidth == BandwidthRule::median && warmup < 2)
        throw std::invalid_argument("ApiConfig: median bandwidth needs at least two warm-up points");
    if (!(initial_p >= 1.0 && initial_p <= 2.0)) throw std::invalid_argument("ApiConfig: initial p must lie in [1, 2]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
        throw std::invalid_argument("ApiConfig: need 0 <= epsilon_end <= epsilon_start <= 1");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
        throw std::invalid_argument("ApiConfig: epsilon decay must lie in (0, 1]");
    replay.validate();
}

ApiAgent::ApiAgent(Eigen::Index order, double rho, FeatureConfig features, ActionGrid grid, ApiConfig cfg,
                   std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      grid_(std::move(grid)),
      tracker_(order, rho, features, cfg.n_avg),
      map_seed_(split_seed(seed, 0)),
      replay_rng_(make_rng(split_seed(seed, 1))),
      explore_rng_(make_rng(split_seed(seed, 2))),
      epsilon_(cfg.epsilon_start),
      buffer_(cfg.replay) {
    if (cfg_.bandwidth == BandwidthRule::fixed) build_map(cfg_.sigma);
}

void ApiAgent::build_map(double sigma) {
    map_ = RffMap::draw(cfg_.features, sigma, map_seed_);
    table_.emplace(*map_, grid_);
    q_ = QFunction::zero(cfg_.features);
}

ApiAgent::Record ApiAgent::evaluate(double a, const StateProjection& proj, const AveragingStates& avg) const {
    Record r;
    r.avg_proj.reserve(avg.size());
    r.mu.reserve(avg.size());
    Vector acc = Vector::Zero(map_->dim());
    for (const auto& sa : avg) {
        r.avg_proj.push_back(map_->project(sa));
        const std::size_t k = table_->greedy_index(q_.w, r.avg_proj.back());
        r.mu.push_back(grid_[k]);
        acc += table_->feature(r.avg_proj.back(), k);
    }
    r.phi_z = table_->feature(proj, grid_index(a));
    r.h = r.phi_z;
    if (cfg_.alpha != 0.0) r.h -= (cfg_.alpha / static_cast<double>(avg.size())) * acc;
    return r;
}

std::size_t ApiAgent::grid_index(double a) const {
    for (std::size_t k = 0; k < grid_.size(); ++k)
        if (grid_[k] == a) return k;
    throw std::logic_error("ApiAgent: action outside the grid");
}

double ApiAgent::step(const Vector& x, double y) {
    const bool learning = map_.has_value();
    const StateVector s = tracker_.observe(x, y, cfg_.initial_p);

    StateProjection proj;
    double a = cfg_.initial_p;
    if (learning) {
        proj = map_->project(s);
        if (tracker_.steps() > 0) {
            std::size_t k = 0;
            if (epsilon_ > 0.0 && std::bernoulli_distribution(epsilon_)(explore_rng_))
                k = std::uniform_int_distribution<std::size_t>(0, grid_.size() - 1)(explore_rng_);
            else
                k = table_->greedy_index(q_.w, proj);
            a = grid_[k];
        }
        epsilon_ = std::max(cfg_.epsilon_end, epsilon_ * cfg_.epsilon_decay);
    }

    const double g = tracker_.advance(a);
    trace_ = StepTrace{};
    trace_.s = s;
    trace_.a = a;
    trace_.g = g;

    if (!learning) {
        warmup_points_.push_back({s, a});
        if (warmup_points_.size() >= cfg_.warmup) {
            build_map(median_bandwidth(warmup_points_));
            warmup_points_.clear();
        }
        return a;
    }

    const Vector& theta_next = tracker_.filter().theta();
    AveragingStates avg = generate_avg_states(tracker_.window(), theta_next, s, cfg_.n_avg, tracker_.config());

    q_ = replay_pass(q_, buffer_, *map_, *table_, cfg_.alpha, cfg_.eta, replay_rng_);

    Record rec = evaluate(a, proj, avg);
    trace_.residual = q_.w.dot(rec.h) - g;
    q_ = q_update(q_, rec.h, g, cfg_.eta);
    trace_.learned = true;

    if (cfg_.counterfactual) {
        // Loss of every other p on the same pair, without applying it.
        const FilterState before(tracker_.theta_prev(), tracker_.filter().rho());
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            if (grid_[k] == a) continue;
            const Vector alt = lmp_step(before, x, y, grid_[k]).theta();
            const double g_alt = one_step_loss(tracker_.window(), alt, tracker_.config());
            const AveragingStates avg_alt =
                generate_avg_states(tracker_.window(), alt, s, cfg_.n_avg, tracker_.config());
            Record r = evaluate(grid_[k], proj, avg_alt);
            q_ = q_update(q_, r.h, g_alt, cfg_.eta);
            if (cfg_.replay_counterfactual) {
                ReplayRecord alt_rec;
                alt_rec.s = s;
                alt_rec.a = grid_[k];
                alt_rec.g = g_alt;
                alt_rec.avg = avg_alt;
                alt_rec.phi_z = std::move(r.phi_z);
                alt_rec.avg_proj = std::move(r.avg_proj);
                buffer_.push(std::move(alt_rec));
            }
        }
    }

    ReplayRecord stored;
    stored.s = s;
    stored.a = a;
    stored.g = g;
    stored.avg = avg;
    stored.phi_z = std::move(rec.phi_z);
    stored.avg_proj = std::move(rec.avg_proj);
    buffer_.push(std::move(stored));

    trace_.mu = std::move(rec.mu);
    trace_.h = std::move(rec.h);
    trace_.avg = std::move(avg);
    return a;
}

} // namespace lmprl
