#include "lmprl/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace lmprl {

void KernelTd0::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("KernelTd0: alpha must lie in [0, 1)");
    if (!(eta >= 0.0)) throw std::invalid_argument("KernelTd0: eta must be nonnegative");
    if (features <= 0) throw std::invalid_argument("KernelTd0: feature dimension must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("KernelTd0: sigma must be positive");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
        throw std::invalid_argument("KernelTd0: need 0 <= epsilon_end <= epsilon_start <= 1");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
        throw std::invalid_argument("KernelTd0: epsilon decay must lie in (0, 1]");
    if (replay_capacity == 0) throw std::invalid_argument("KernelTd0: replay capacity must be positive");
}

FixedPLearner::FixedPLearner(Eigen::Index order, double rho, double p) : filter_(order, rho), p_(p) {
    if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("FixedPLearner: p must lie in [1, 2]");
}

double FixedPLearner::step(const Vector& x, double y) {
    filter_ = lmp_step(filter_, x, y, p_);
    return p_;
}

RandomPLearner::RandomPLearner(Eigen::Index order, double rho, ActionGrid grid, std::uint64_t seed)
    : filter_(order, rho), grid_(std::move(grid)), rng_(make_rng(seed)) {}

double RandomPLearner::step(const Vector& x, double y) {
    std::uniform_int_distribution<std::size_t> pick(0, grid_.size() - 1);
    const double p = grid_[pick(rng_)];
    filter_ = lmp_step(filter_, x, y, p);
    return p;
}

KernelTd0Learner::KernelTd0Learner(Eigen::Index order, double rho, FeatureConfig features, ActionGrid grid,
                                   KernelTd0 cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      grid_(std::move(grid)),
      tracker_(order, rho, features),
      map_(RffMap::draw(cfg.features, cfg.sigma, split_seed(seed, 0))),
      table_(map_, grid_),
      q_(QFunction::zero(cfg.features)),
      rng_(make_rng(split_seed(seed, 1))),
      epsilon_(cfg.epsilon_start) {
    replay_.reserve(cfg_.replay_capacity);
}

void KernelTd0Learner::td_update(const Vector& phi, const StateProjection& next, double g) {
    if (cfg_.eta == 0.0) return;
    const double bootstrap = table_.q_values(q_.w, next).minCoeff();
    const double delta = g + cfg_.alpha * bootstrap - q_.w.dot(phi);
    q_.w += (cfg_.eta * delta) * phi;
}

double KernelTd0Learner::step(const Vector& x, double y) {
    const StateVector& s = tracker_.observe(x, y, grid_[grid_.size() - 1]);
    StateProjection proj = map_.project(s);

    // Complete the previous transition now that s' is known.
    if (pending_phi_) {
        td_update(*pending_phi_, proj, pending_g_);
        Transition t{std::move(*pending_phi_), proj, pending_g_};
        if (replay_.size() < cfg_.replay_capacity) {
            replay_.push_back(std::move(t));
        } else {
            replay_[replay_head_] = std::move(t);
            replay_head_ = (replay_head_ + 1) % cfg_.replay_capacity;
        }
        std::uniform_int_distribution<std::size_t> pick(0, replay_.size() - 1);
        for (std::size_t r = 0; r < cfg_.replay_per_step; ++r) {
            const auto& rec = replay_[pick(rng_)];
            td_update(rec.phi, rec.next, rec.g);
        }
        pending_phi_.reset();
    }

    // The first step uses p = 2, the same constant initial policy as the agent.
    std::size_t k = grid_.size() - 1;
    if (tracker_.steps() > 0) {
        std::bernoulli_distribution explore(epsilon_);
        if (explore(rng_)) {
            std::uniform_int_distribution<std::size_t> pick(0, grid_.size() - 1);
            k = pick(rng_);
        } else {
            k = table_.greedy_index(q_.w, proj);
        }
    }
    epsilon_ = std::max(cfg_.epsilon_end, epsilon_ * cfg_.epsilon_decay);

    const double p = grid_[k];
    pending_g_ = tracker_.advance(p);
    pending_phi_ = table_.feature(proj, k);
    return p;
}

std::unique_ptr<Learner> make_baseline(const BaselineKind& kind, Eigen::Index order, double rho,
                                       const FeatureConfig& features, const ActionGrid& grid,
                                       std::uint64_t seed) {
    struct Factory {
        Eigen::Index order;
        double rho;
        const FeatureConfig& features;
        const ActionGrid& grid;
        std::uint64_t seed;

        std::unique_ptr<Learner> operator()(const FixedP& k) const {
            return std::make_unique<FixedPLearner>(order, rho, k.p);
        }
        std::unique_ptr<Learner> operator()(const RandomP&) const {
            return std::make_unique<RandomPLearner>(order, rho, grid, seed);
        }
        std::unique_ptr<Learner> operator()(const KernelTd0& k) const {
            return std::make_unique<KernelTd0Learner>(order, rho, features, grid, k, seed);
        }
    };
    return std::visit(Factory{order, rho, features, grid, seed}, kind);
}

} // namespace lmprl
