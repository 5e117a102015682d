#include "lmprl/environment.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace lmprl {

void ExperimentConfig::validate() const {
    if (order <= 0) throw std::invalid_argument("ExperimentConfig: filter order must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("ExperimentConfig: rho must be positive");
    if (total_steps == 0) throw std::invalid_argument("ExperimentConfig: total_steps must be positive");
    if (change_step >= total_steps) throw std::invalid_argument("ExperimentConfig: change_step must precede total_steps");
    if (!(stable.alpha > 0.0 && stable.alpha <= 2.0))
        throw std::invalid_argument("ExperimentConfig: stable alpha must lie in (0, 2]");
    if (!(stable.beta >= -1.0 && stable.beta <= 1.0))
        throw std::invalid_argument("ExperimentConfig: stable beta must lie in [-1, 1]");
    if (!(stable.sigma > 0.0)) throw std::invalid_argument("ExperimentConfig: stable sigma must be positive");
    if (!(sparse.outlier_prob >= 0.0 && sparse.outlier_prob <= 1.0))
        throw std::invalid_argument("ExperimentConfig: outlier probability must lie in [0, 1]");
    if (!(sparse.outlier_range >= 0.0)) throw std::invalid_argument("ExperimentConfig: outlier range must be >= 0");
    if (!std::isfinite(sparse.snr_db)) throw std::invalid_argument("ExperimentConfig: SNR must be finite");
}

double sample_alpha_stable(double alpha, double beta, double sigma, Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("sample_alpha_stable: alpha must lie in (0, 2]");
    if (!(beta >= -1.0 && beta <= 1.0)) throw std::invalid_argument("sample_alpha_stable: beta must lie in [-1, 1]");
    if (!(sigma > 0.0)) throw std::invalid_argument("sample_alpha_stable: sigma must be positive");

    constexpr double half_pi = std::numbers::pi / 2.0;
    std::uniform_real_distribution<double> angle(-half_pi, half_pi);
    std::exponential_distribution<double> expo(1.0);
    double v = angle(rng);
    while (v == -half_pi) v = angle(rng);
    const double w = expo(rng);

    if (alpha == 1.0) {
        const double shifted = half_pi + beta * v;
        const double x =
            (shifted * std::tan(v) - beta * std::log(half_pi * w * std::cos(v) / shifted)) / half_pi;
        return sigma * x + beta * sigma * std::log(sigma) / half_pi;
    }

    const double t = beta * std::tan(half_pi * alpha);
    const double b = std::atan(t) / alpha;
    const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    const double x = s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
    return sigma * x;
}

double sample_sparse_noise(const SparseParams& params, double signal_power, Rng& rng) {
    std::bernoulli_distribution outlier(params.outlier_prob);
    if (outlier(rng)) {
        std::uniform_real_distribution<double> uniform(-params.outlier_range, params.outlier_range);
        return uniform(rng);
    }
    const double variance = signal_power / std::pow(10.0, params.snr_db / 10.0);
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    return normal(rng);
}

Environment::Environment(const ExperimentConfig& cfg) : cfg_(cfg), rng_(make_rng(cfg.seed)) {
    cfg_.validate();
    draw_system();
}

void Environment::draw_system() {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto theta = std::make_shared<Vector>(cfg_.order);
    for (Eigen::Index i = 0; i < cfg_.order; ++i) (*theta)(i) = normal(rng_);
    signal_power_ = theta->squaredNorm();
    theta_star_ = std::move(theta);
}

StreamSample Environment::next() {
    StreamSample out;
    if (n_ == cfg_.change_step) {
        draw_system();
        out.changed = true;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    out.x.resize(cfg_.order);
    for (Eigen::Index i = 0; i < cfg_.order; ++i) out.x(i) = normal(rng_);

    switch (cfg_.noise) {
    case NoiseKind::alpha_stable:
        out.o = sample_alpha_stable(cfg_.stable.alpha, cfg_.stable.beta, cfg_.stable.sigma, rng_);
        break;
    case NoiseKind::sparse:
        out.o = sample_sparse_noise(cfg_.sparse, signal_power_, rng_);
        break;
    case NoiseKind::none:
        out.o = 0.0;
        break;
    }
    // Report the noise that is actually present in y after rounding.
    const double clean = theta_star_->dot(out.x);
    out.y = clean + out.o;
    out.o = out.y - clean;
    out.theta_star = theta_star_;
    ++n_;
    return out;
}

void dump_stream_csv(const ExperimentConfig& cfg, std::size_t steps, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_stream_csv: cannot open " + path.string());
    Environment env(cfg);
    out.precision(17);
    out << "n,o,y,changed\n";
    for (std::size_t n = 0; n < steps; ++n) {
        const auto s = env.next();
        out << n << ',' << s.o << ',' << s.y << ',' << (s.changed ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("dump_stream_csv: write failed for " + path.string());
}

} // namespace lmprl
