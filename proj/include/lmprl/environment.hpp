#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "lmprl/lmp_filter.hpp"
#include "lmprl/rng.hpp"

namespace lmprl {

enum class NoiseKind { alpha_stable, sparse, none };

struct AlphaStableParams {
    double alpha = 1.0;
    double beta = 0.5;
    double sigma = 1.0;
};

struct SparseParams {
    double outlier_prob = 0.1;
    double outlier_range = 100.0;
    double snr_db = 30.0;
};

struct ExperimentConfig {
    Eigen::Index order = 100; ///< L
    double rho = 1e-3;
    std::size_t total_steps = 40000;
    std::size_t change_step = 20000;
    NoiseKind noise = NoiseKind::alpha_stable;
    AlphaStableParams stable;
    SparseParams sparse;
    std::uint64_t seed = 1;

    void validate() const;
};

struct StreamSample {
    Vector x;
    double y = 0.0;
    double o = 0.0;
    std::shared_ptr<const Vector> theta_star;
    bool changed = false; ///< the system was redrawn right before this sample
};

/// One draw from the stable law S(alpha, beta, sigma, 0), S1 parameterization,
/// via the Chambers-Mallows-Stuck transform (with its alpha = 1 branch).
double sample_alpha_stable(double alpha, double beta, double sigma, Rng& rng);

/// Uniform outlier on [-range, range] with probability outlier_prob, otherwise
/// Gaussian with variance signal_power / 10^(snr_db / 10).
double sample_sparse_noise(const SparseParams& params, double signal_power, Rng& rng);

/// Synthetic system-identification stream: x ~ N(0, I_L), theta* ~ N(0, I_L),
/// y = theta*^T x + o. At `change_step` theta* is redrawn independently.
class Environment {
public:
    explicit Environment(const ExperimentConfig& cfg);

    StreamSample next();

    const Vector& theta_star() const noexcept { return *theta_star_; }
    std::size_t step() const noexcept { return n_; }

private:
    void draw_system();

    ExperimentConfig cfg_;
    Rng rng_;
    std::shared_ptr<const Vector> theta_star_;
    double signal_power_ = 0.0;
    std::size_t n_ = 0;
};

/// Writes `steps` samples as CSV with header `n,o,y,changed`.
void dump_stream_csv(const ExperimentConfig& cfg, std::size_t steps, const std::filesystem::path& path);

} // namespace lmprl
