#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lmprl/rff.hpp"
#include "lmprl/rng.hpp"
#include "lmprl/state_features.hpp"

namespace lmprl {

/// Admissible p-values: strictly increasing, nonempty, inside [1, 2].
class ActionGrid {
public:
    explicit ActionGrid(std::vector<double> values);

    /// {1, 1.25, 1.5, 1.75, 2}
    static ActionGrid uniform_default();

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const { return values_.at(k); }
    const std::vector<double>& values() const noexcept { return values_; }
    bool contains(double a) const noexcept;

private:
    std::vector<double> values_;
};

/// Q(z) = w^T phi(z) in random-feature coordinates.
struct QFunction {
    Vector w;

    static QFunction zero(Eigen::Index dim) { return {Vector::Zero(dim)}; }
};

using AveragingStates = std::vector<StateVector>;

double q_value(const QFunction& q, const RffMap& map, const StateAction& z);

/// argmin over the grid of Q(s, a); ties go to the smallest grid index.
double greedy_action(const QFunction& q, const RffMap& map, const StateVector& s, const ActionGrid& grid);

/// Per-map, per-grid table of cos(a_k v_i5) and sin(a_k v_i5). Combined with a
/// StateProjection it gives phi(s, a_k) without further trigonometric calls.
class ActionFeatures {
public:
    ActionFeatures(const RffMap& map, const ActionGrid& grid);

    std::size_t actions() const noexcept { return static_cast<std::size_t>(cos_a_.cols()); }

    Vector feature(const StateProjection& proj, std::size_t k) const;

    /// Q(s, a_k) for every grid index k.
    Vector q_values(const Vector& w, const StateProjection& proj) const;

    /// Same tie rule as greedy_action.
    std::size_t greedy_index(const Vector& w, const StateProjection& proj) const;

private:
    Eigen::MatrixXd cos_a_; // D x K
    Eigen::MatrixXd sin_a_;
    double scale_;
};

/// Averaging states from re-used past data. `window` must already contain the
/// current pair (newest entry n); state j (1-based) uses pair n + 1 - j under
/// `theta_next`, together with the current s2 and s4. Returns
/// min(count, window.size()) states.
AveragingStates generate_avg_states(const DataWindow& window, const Vector& theta_next,
                                    const StateVector& current, std::size_t count,
                                    const FeatureConfig& cfg);

/// h = phi(z_n) - (alpha / N) sum_j phi(s_j, mu_j).
Vector build_h(const RffMap& map, const StateAction& z_n, const AveragingStates& avg,
               std::span<const double> mu_actions, double alpha);

/// Steepest descent on (1/2)(w^T h - g)^2: w' = w - eta (w^T h - g) h.
QFunction q_update(const QFunction& q, const Vector& h, double g_target, double eta);

struct ReplayRecord {
    StateVector s;
    double a = 2.0;
    double g = 0.0;
    AveragingStates avg;
    double priority = 0.0;

    // Optional caches; replay recomputes them from s, a and avg when absent.
    std::optional<Vector> phi_z;
    std::vector<StateProjection> avg_proj;
};

struct ReplayConfig {
    std::size_t capacity = 500;
    std::size_t per_step = 5;
    double priority_exponent = 0.6;
    double priority_offset = 1e-6;

    void validate() const;
};

/// Bounded FIFO of replay records with proportional prioritized sampling:
/// P(record) is proportional to priority^exponent + offset. New records enter
/// with the current maximal priority (1 when the buffer is empty).
class ReplayBuffer {
public:
    explicit ReplayBuffer(ReplayConfig cfg = {});

    void push(ReplayRecord record);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const ReplayConfig& config() const noexcept { return cfg_; }
    ReplayRecord& operator[](std::size_t i) { return records_.at(i); }
    const ReplayRecord& operator[](std::size_t i) const { return records_.at(i); }

    /// Indices of `count` records drawn with replacement.
    std::vector<std::size_t> sample(std::size_t count, Rng& rng) const;

private:
    ReplayConfig cfg_;
    std::vector<ReplayRecord> records_; // ring storage
    std::size_t head_ = 0;
};

/// Replays `buffer.config().per_step` records. For each one, rebuilds h with the
/// greedy actions of the current Q at its stored averaging states, applies
/// q_update toward its stored loss and sets its priority to |w^T h - g| measured
/// before the update.
QFunction replay_pass(const QFunction& q, ReplayBuffer& buffer, const RffMap& map,
                      const ActionGrid& grid, double alpha, double eta, Rng& rng);

/// Same as replay_pass, using the precomputed action table and record caches.
QFunction replay_pass(const QFunction& q, ReplayBuffer& buffer, const RffMap& map,
                      const ActionFeatures& table, double alpha, double eta, Rng& rng);

/// Sample-average Bellman map for a fixed policy, in random-feature coordinates:
///   T w = w_g + alpha * Psi * Phi^T w,
/// where Phi holds the features of (s_j, mu_j) and every column of Psi is
/// psi = (1/N) phi(z_n) / ||phi(z_n)||^2, the minimum-norm vector with
/// psi^T phi(z_n) = 1/N.
class BellmanMap {
public:
    BellmanMap(const RffMap& map, const StateAction& z_n, const AveragingStates& avg,
               std::span<const double> mu_actions, double alpha, Vector w_g);

    Vector apply(const Vector& w) const;

    const Eigen::MatrixXd& psi() const noexcept { return psi_; }
    const Eigen::MatrixXd& phi_avg() const noexcept { return phi_avg_; }
    double alpha() const noexcept { return alpha_; }

    /// Spectral norms of Psi^T Psi and Phi^T Phi.
    double psi_gram_norm() const;
    double avg_gram_norm() const;

    /// Largest alpha for which nonexpansivity is guaranteed:
    /// ||K_psi||^(-1/2) ||K_avg||^(-1/2).
    double alpha_bound() const;

    /// Operator norm of the linear part alpha Psi Phi^T.
    double lipschitz_constant() const;

private:
    Eigen::MatrixXd psi_;
    Eigen::MatrixXd phi_avg_;
    Vector w_g_;
    double alpha_;
};

struct NonexpansiveReport {
    bool passed = false;
    double worst_ratio = 0.0;
    double alpha_bound = 0.0;
    bool alpha_within_bound = false;
};

/// Checks ||T w - T w'|| <= ||w - w'|| on `trials` random Gaussian pairs.
/// The sup over all policies in the alpha bound is relaxed to the realized
/// policy's Gram matrix.
NonexpansiveReport check_nonexpansive(const RffMap& map, const AveragingStates& avg,
                                      std::span<const double> mu_actions, double alpha,
                                      const StateAction& z_n, std::size_t trials, std::uint64_t seed);

} // namespace lmprl
