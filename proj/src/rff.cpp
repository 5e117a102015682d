#include "lmprl/rff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lmprl/rng.hpp"

namespace lmprl {

RffMap::RffMap(Frequencies frequencies, Vector phases, double sigma)
    : frequencies_(std::move(frequencies)), phases_(std::move(phases)), sigma_(sigma) {
    if (phases_.size() == 0) throw std::invalid_argument("RffMap: feature dimension must be positive");
    if (frequencies_.rows() != phases_.size())
        throw std::invalid_argument("RffMap: frequency rows and phases disagree in count");
    if (!(sigma_ > 0.0)) throw std::invalid_argument("RffMap: bandwidth must be positive");
    scale_ = std::sqrt(2.0 / static_cast<double>(phases_.size()));
}

RffMap RffMap::draw(Eigen::Index dim, double sigma, std::uint64_t seed) {
    if (dim <= 0) throw std::invalid_argument("RffMap::draw: feature dimension must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("RffMap::draw: bandwidth must be positive");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

    Frequencies v(dim, kStateActionDim);
    Vector b(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index c = 0; c < kStateActionDim; ++c) v(i, c) = normal(rng) / sigma;
        b(i) = uniform(rng);
    }
    return RffMap(std::move(v), std::move(b), sigma);
}

Vector RffMap::features(const StateActionVector& z) const {
    return scale_ * (frequencies_ * z + phases_).array().cos().matrix();
}

Vector RffMap::features(const StateAction& z) const { return features(z.as_vector()); }

StateProjection RffMap::project(const StateVector& s) const {
    const Eigen::Vector4d sv(s.s1, s.s2, s.s3, s.s4);
    const Vector u = frequencies_.leftCols<4>() * sv + phases_;
    return {u.array().cos().matrix(), u.array().sin().matrix()};
}

nlohmann::json RffMap::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < frequencies_.rows(); ++i) {
        std::vector<double> row(frequencies_.cols());
        for (Eigen::Index c = 0; c < frequencies_.cols(); ++c) row[c] = frequencies_(i, c);
        rows.push_back(row);
    }
    return {{"dim", dim()},
            {"input_dim", kStateActionDim},
            {"sigma", sigma_},
            {"frequencies", rows},
            {"phases", std::vector<double>(phases_.data(), phases_.data() + phases_.size())}};
}

RffMap RffMap::from_json(const nlohmann::json& j) {
    const auto dim = j.at("dim").get<Eigen::Index>();
    if (j.at("input_dim").get<Eigen::Index>() != kStateActionDim)
        throw std::invalid_argument("RffMap::from_json: unexpected input dimension");
    const auto& rows = j.at("frequencies");
    const auto phases = j.at("phases").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(rows.size()) != dim || static_cast<Eigen::Index>(phases.size()) != dim)
        throw std::invalid_argument("RffMap::from_json: array lengths disagree with dim");
    Frequencies v(dim, kStateActionDim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const auto row = rows[i].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != kStateActionDim)
            throw std::invalid_argument("RffMap::from_json: malformed frequency row");
        for (Eigen::Index c = 0; c < kStateActionDim; ++c) v(i, c) = row[c];
    }
    return RffMap(std::move(v), Eigen::Map<const Vector>(phases.data(), dim), j.at("sigma").get<double>());
}

double gaussian_kernel(const StateAction& z, const StateAction& z2, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    return std::exp(-(z.as_vector() - z2.as_vector()).squaredNorm() / (2.0 * sigma * sigma));
}

double median_bandwidth(std::span<const StateAction> points) {
    if (points.size() < 2) throw std::invalid_argument("median_bandwidth: need at least two points");
    std::vector<double> dist;
    dist.reserve(points.size() * (points.size() - 1) / 2);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            dist.push_back((points[i].as_vector() - points[j].as_vector()).norm());
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
    return median;
}

Eigen::MatrixXd feature_matrix_serial(const RffMap& map, std::span<const StateAction> points) {
    Eigen::MatrixXd out(map.dim(), static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = map.features(points[k]);
    return out;
}

Eigen::MatrixXd feature_matrix(const RffMap& map, std::span<const StateAction> points) {
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    Eigen::MatrixXd out(map.dim(), n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out.col(k) = map.features(points[static_cast<std::size_t>(k)]);
    return out;
}

} // namespace lmprl
