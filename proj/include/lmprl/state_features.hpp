#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "lmprl/lmp_filter.hpp"

namespace lmprl {

/// Four-dimensional RL state built from the data stream and the filter estimate.
struct StateVector {
    double s1 = 0.0; ///< log10 prior loss
    double s2 = 0.0; ///< windowed log posterior loss, normalized by input norm
    double s3 = 0.0; ///< log10 input norm
    double s4 = 0.0; ///< smoothed log displacement of the estimate

    std::array<double, 4> as_array() const noexcept { return {s1, s2, s3, s4}; }
    bool operator==(const StateVector&) const = default;
};

struct FeatureConfig {
    std::size_t window = 300;  ///< M_av
    double smoothing = 0.3;    ///< varpi in (0, 1)
    double log_floor = 1e-12;

    void validate() const;
};

/// Ring buffer of the most recent (x, y) pairs, newest first.
class DataWindow {
public:
    struct Pair {
        Vector x;
        double y = 0.0;
        double x_norm = 0.0;
    };

    explicit DataWindow(std::size_t capacity);

    void push(const Vector& x, double y);

    /// k = 0 is the most recently pushed pair.
    const Pair& recent(std::size_t k) const;

    std::size_t size() const noexcept { return count_; }
    std::size_t capacity() const noexcept { return slots_.size(); }
    bool empty() const noexcept { return count_ == 0; }
    void clear() noexcept { count_ = 0; }

private:
    std::vector<Pair> slots_;
    std::size_t head_ = 0; // next write slot
    std::size_t count_ = 0;
};

/// log10(max(v, floor)).
double clamped_log10(double v, double floor) noexcept;

/// Mean of log10(|y - theta^T x| / ||x||) over the `count` newest window pairs.
/// Returns 0 when count is 0.
double windowed_log_loss(const DataWindow& window, const Vector& theta, std::size_t count,
                         double floor);

/// State at time n. `window` holds the pairs before n (its newest entry is n-1);
/// `theta` is the current estimate, `theta_prev` the one before it.
StateVector compute_state(const DataWindow& window, const Vector& theta, const Vector& theta_prev,
                          const Vector& x, double y, double prev_s4, const FeatureConfig& cfg,
                          double rho);

/// Initial smoothed displacement, log10(p0) + (p0 - 1) s1 + s3. Equals
/// log10(||theta_1 - theta_0|| / rho) when theta_1 = lmp_step(theta_0, ., ., p0).
double initial_s4(double p0, double s1_0, double s3_0);

/// One-step loss after the update: `window` already contains the current pair
/// (newest entry is n) and `theta_next` is the updated estimate. Equal to the
/// s2 component of the next state.
double one_step_loss(const DataWindow& window, const Vector& theta_next, const FeatureConfig& cfg);

} // namespace lmprl
