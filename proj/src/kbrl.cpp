#include "lmprl/kbrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace lmprl {

namespace {

constexpr double kRatioTolerance = 1e-9;

std::size_t argmin_first(const Vector& values) {
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < values.size(); ++k)
        if (values(k) < values(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
    return best;
}

double spectral_norm_of_gram(const Eigen::MatrixXd& columns) {
    const Eigen::MatrixXd gram = columns.transpose() * columns;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

ActionGrid::ActionGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("ActionGrid: grid must be nonempty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!(values_[k] >= 1.0 && values_[k] <= 2.0))
            throw std::invalid_argument("ActionGrid: p-values must lie in [1, 2]");
        if (k > 0 && !(values_[k] > values_[k - 1]))
            throw std::invalid_argument("ActionGrid: p-values must be strictly increasing");
    }
}

ActionGrid ActionGrid::uniform_default() { return ActionGrid({1.0, 1.25, 1.5, 1.75, 2.0}); }

bool ActionGrid::contains(double a) const noexcept {
    return std::find(values_.begin(), values_.end(), a) != values_.end();
}

double q_value(const QFunction& q, const RffMap& map, const StateAction& z) {
    if (q.w.size() != map.dim()) throw std::invalid_argument("q_value: weight and feature dimensions differ");
    return q.w.dot(map.features(z));
}

double greedy_action(const QFunction& q, const RffMap& map, const StateVector& s, const ActionGrid& grid) {
    Vector values(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k)
        values(static_cast<Eigen::Index>(k)) = q_value(q, map, {s, grid[k]});
    return grid[argmin_first(values)];
}

ActionFeatures::ActionFeatures(const RffMap& map, const ActionGrid& grid)
    : cos_a_(map.dim(), static_cast<Eigen::Index>(grid.size())),
      sin_a_(map.dim(), static_cast<Eigen::Index>(grid.size())),
      scale_(map.scale()) {
    const auto action_freq = map.frequencies().col(kStateActionDim - 1);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        const Vector angle = grid[k] * action_freq;
        cos_a_.col(col) = angle.array().cos().matrix();
        sin_a_.col(col) = angle.array().sin().matrix();
    }
}

Vector ActionFeatures::feature(const StateProjection& proj, std::size_t k) const {
    const auto col = static_cast<Eigen::Index>(k);
    return scale_ * (proj.cos_u.cwiseProduct(cos_a_.col(col)) - proj.sin_u.cwiseProduct(sin_a_.col(col)));
}

Vector ActionFeatures::q_values(const Vector& w, const StateProjection& proj) const {
    const Vector wc = w.cwiseProduct(proj.cos_u);
    const Vector ws = w.cwiseProduct(proj.sin_u);
    return scale_ * (cos_a_.transpose() * wc - sin_a_.transpose() * ws);
}

std::size_t ActionFeatures::greedy_index(const Vector& w, const StateProjection& proj) const {
    return argmin_first(q_values(w, proj));
}

AveragingStates generate_avg_states(const DataWindow& window, const Vector& theta_next,
                                    const StateVector& current, std::size_t count,
                                    const FeatureConfig& cfg) {
    const std::size_t n = std::min(count, window.size());
    AveragingStates out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& pair = window.recent(j);
        out.push_back({clamped_log10(std::abs(pair.y - theta_next.dot(pair.x)), cfg.log_floor), current.s2,
                       clamped_log10(pair.x_norm, cfg.log_floor), current.s4});
    }
    return out;
}

Vector build_h(const RffMap& map, const StateAction& z_n, const AveragingStates& avg,
               std::span<const double> mu_actions, double alpha) {
    if (avg.empty()) throw std::invalid_argument("build_h: averaging-state list is empty");
    if (mu_actions.size() != avg.size())
        throw std::invalid_argument("build_h: one action per averaging state is required");
    Vector h = map.features(z_n);
    if (alpha == 0.0) return h;
    Vector acc = Vector::Zero(map.dim());
    for (std::size_t j = 0; j < avg.size(); ++j) acc += map.features(StateAction{avg[j], mu_actions[j]});
    h -= (alpha / static_cast<double>(avg.size())) * acc;
    return h;
}

QFunction q_update(const QFunction& q, const Vector& h, double g_target, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("q_update: step size must be positive");
    if (h.size() != q.w.size()) throw std::invalid_argument("q_update: h and w dimensions differ");
    const double residual = q.w.dot(h) - g_target;
    if (residual == 0.0) return q;
    return {q.w - (eta * residual) * h};
}

void ReplayConfig::validate() const {
    if (capacity == 0) throw std::invalid_argument("ReplayConfig: capacity must be positive");
    if (!(priority_exponent >= 0.0)) throw std::invalid_argument("ReplayConfig: priority exponent must be >= 0");
    if (!(priority_offset > 0.0)) throw std::invalid_argument("ReplayConfig: priority offset must be positive");
}

ReplayBuffer::ReplayBuffer(ReplayConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    records_.reserve(cfg_.capacity);
}

void ReplayBuffer::push(ReplayRecord record) {
    double max_priority = 1.0;
    if (!records_.empty()) {
        max_priority = 0.0;
        for (const auto& r : records_) max_priority = std::max(max_priority, r.priority);
    }
    record.priority = max_priority;
    if (records_.size() < cfg_.capacity) {
        records_.push_back(std::move(record));
    } else {
        records_[head_] = std::move(record);
        head_ = (head_ + 1) % cfg_.capacity;
    }
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
    std::vector<std::size_t> out;
    if (records_.empty()) return out;
    std::vector<double> weights(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i)
        weights[i] = std::pow(records_[i].priority, cfg_.priority_exponent) + cfg_.priority_offset;
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    out.reserve(count);
    for (std::size_t r = 0; r < count; ++r) out.push_back(pick(rng));
    return out;
}

QFunction replay_pass(const QFunction& q, ReplayBuffer& buffer, const RffMap& map,
                      const ActionGrid& grid, double alpha, double eta, Rng& rng) {
    QFunction out = q;
    for (std::size_t idx : buffer.sample(buffer.config().per_step, rng)) {
        ReplayRecord& rec = buffer[idx];
        std::vector<double> mu(rec.avg.size());
        for (std::size_t j = 0; j < rec.avg.size(); ++j) mu[j] = greedy_action(out, map, rec.avg[j], grid);
        const Vector h = build_h(map, {rec.s, rec.a}, rec.avg, mu, alpha);
        rec.priority = std::abs(out.w.dot(h) - rec.g);
        out = q_update(out, h, rec.g, eta);
    }
    return out;
}

QFunction replay_pass(const QFunction& q, ReplayBuffer& buffer, const RffMap& map,
                      const ActionFeatures& table, double alpha, double eta, Rng& rng) {
    QFunction out = q;
    for (std::size_t idx : buffer.sample(buffer.config().per_step, rng)) {
        ReplayRecord& rec = buffer[idx];
        if (!rec.phi_z) rec.phi_z = map.features(StateAction{rec.s, rec.a});
        if (rec.avg_proj.size() != rec.avg.size()) {
            rec.avg_proj.clear();
            for (const auto& s : rec.avg) rec.avg_proj.push_back(map.project(s));
        }
        Vector h = *rec.phi_z;
        if (alpha != 0.0 && !rec.avg.empty()) {
            Vector acc = Vector::Zero(map.dim());
            for (const auto& proj : rec.avg_proj) acc += table.feature(proj, table.greedy_index(out.w, proj));
            h -= (alpha / static_cast<double>(rec.avg.size())) * acc;
        }
        rec.priority = std::abs(out.w.dot(h) - rec.g);
        out = q_update(out, h, rec.g, eta);
    }
    return out;
}

BellmanMap::BellmanMap(const RffMap& map, const StateAction& z_n, const AveragingStates& avg,
                       std::span<const double> mu_actions, double alpha, Vector w_g)
    : w_g_(std::move(w_g)), alpha_(alpha) {
    if (avg.empty()) throw std::invalid_argument("BellmanMap: averaging-state list is empty");
    if (mu_actions.size() != avg.size())
        throw std::invalid_argument("BellmanMap: one action per averaging state is required");
    if (w_g_.size() != map.dim()) throw std::invalid_argument("BellmanMap: loss representer has wrong dimension");
    const auto n = static_cast<Eigen::Index>(avg.size());
    const Vector phi_n = map.features(z_n);
    const Vector psi = phi_n / (static_cast<double>(n) * phi_n.squaredNorm());
    psi_ = psi.replicate(1, n);
    phi_avg_.resize(map.dim(), n);
    for (Eigen::Index j = 0; j < n; ++j)
        phi_avg_.col(j) = map.features(StateAction{avg[static_cast<std::size_t>(j)], mu_actions[static_cast<std::size_t>(j)]});
}

Vector BellmanMap::apply(const Vector& w) const { return w_g_ + alpha_ * (psi_ * (phi_avg_.transpose() * w)); }

double BellmanMap::psi_gram_norm() const { return spectral_norm_of_gram(psi_); }

double BellmanMap::avg_gram_norm() const { return spectral_norm_of_gram(phi_avg_); }

double BellmanMap::alpha_bound() const { return 1.0 / std::sqrt(psi_gram_norm() * avg_gram_norm()); }

double BellmanMap::lipschitz_constant() const {
    // ||alpha Psi Phi^T|| via the small N x N product (Psi^T Psi)(Phi^T Phi).
    const Eigen::MatrixXd m = (psi_.transpose() * psi_) * (phi_avg_.transpose() * phi_avg_);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
    return std::abs(alpha_) * std::sqrt(eig.eigenvalues().cwiseAbs().maxCoeff());
}

NonexpansiveReport check_nonexpansive(const RffMap& map, const AveragingStates& avg,
                                      std::span<const double> mu_actions, double alpha,
                                      const StateAction& z_n, std::size_t trials, std::uint64_t seed) {
    const BellmanMap t(map, z_n, avg, mu_actions, alpha, Vector::Zero(map.dim()));
    NonexpansiveReport report;
    report.alpha_bound = t.alpha_bound();
    report.alpha_within_bound = std::abs(alpha) <= report.alpha_bound;

    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < trials; ++k) {
        Vector w(map.dim()), w2(map.dim());
        for (Eigen::Index i = 0; i < map.dim(); ++i) w(i) = normal(rng);
        for (Eigen::Index i = 0; i < map.dim(); ++i) w2(i) = normal(rng);
        const double denom = (w - w2).norm();
        if (denom == 0.0) continue;
        report.worst_ratio = std::max(report.worst_ratio, (t.apply(w) - t.apply(w2)).norm() / denom);
    }
    report.passed = report.worst_ratio <= 1.0 + kRatioTolerance;
    return report;
}

} // namespace lmprl
