#include "lmprl/state_features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lmprl {

void FeatureConfig::validate() const {
    if (window == 0) throw std::invalid_argument("FeatureConfig: window length must be positive");
    if (!(smoothing > 0.0 && smoothing < 1.0))
        throw std::invalid_argument("FeatureConfig: smoothing factor must lie in (0, 1)");
    if (!(log_floor > 0.0)) throw std::invalid_argument("FeatureConfig: log floor must be positive");
}

DataWindow::DataWindow(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw std::invalid_argument("DataWindow: capacity must be positive");
}

void DataWindow::push(const Vector& x, double y) {
    Pair& slot = slots_[head_];
    slot.x = x;
    slot.y = y;
    slot.x_norm = x.norm();
    head_ = (head_ + 1) % slots_.size();
    count_ = std::min(count_ + 1, slots_.size());
}

const DataWindow::Pair& DataWindow::recent(std::size_t k) const {
    if (k >= count_) throw std::out_of_range("DataWindow::recent: index beyond fill count");
    const std::size_t cap = slots_.size();
    return slots_[(head_ + cap - 1 - k) % cap];
}

double clamped_log10(double v, double floor) noexcept { return std::log10(std::max(v, floor)); }

double windowed_log_loss(const DataWindow& window, const Vector& theta, std::size_t count,
                         double floor) {
    if (count == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const auto& pair = window.recent(k);
        const double err = std::abs(pair.y - theta.dot(pair.x));
        acc += clamped_log10(err, floor) - clamped_log10(pair.x_norm, floor);
    }
    return acc / static_cast<double>(count);
}

StateVector compute_state(const DataWindow& window, const Vector& theta, const Vector& theta_prev,
                          const Vector& x, double y, double prev_s4, const FeatureConfig& cfg,
                          double rho) {
    const double floor = cfg.log_floor;
    StateVector s;
    s.s1 = clamped_log10(std::abs(y - theta.dot(x)), floor);
    s.s2 = windowed_log_loss(window, theta, std::min(window.size(), cfg.window), floor);
    s.s3 = clamped_log10(x.norm(), floor);
    const double displacement = (theta - theta_prev).norm();
    s.s4 = cfg.smoothing * prev_s4 +
           (1.0 - cfg.smoothing) * std::log10(std::max(displacement, floor) / rho);
    return s;
}

double initial_s4(double p0, double s1_0, double s3_0) {
    return std::log10(p0) + (p0 - 1.0) * s1_0 + s3_0;
}

double one_step_loss(const DataWindow& window, const Vector& theta_next, const FeatureConfig& cfg) {
    return windowed_log_loss(window, theta_next, std::min(window.size(), cfg.window), cfg.log_floor);
}

} // namespace lmprl
