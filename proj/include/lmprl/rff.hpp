#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lmprl/state_features.hpp"

namespace lmprl {

/// Dimension of a state-action point: four state entries plus the p-value.
inline constexpr Eigen::Index kStateActionDim = 5;

using StateActionVector = Eigen::Matrix<double, kStateActionDim, 1>;

struct StateAction {
    StateVector s;
    double a = 2.0;

    StateActionVector as_vector() const noexcept {
        StateActionVector z;
        z << s.s1, s.s2, s.s3, s.s4, a;
        return z;
    }
};

/// Phases v_i^T [s; 0] + b_i of one state, stored as cosines and sines so that
/// features for any action follow from the angle-addition identity.
struct StateProjection {
    Vector cos_u;
    Vector sin_u;
};

/// Random Fourier feature map approximating the Gaussian kernel
/// exp(-||z - z'||^2 / (2 sigma^2)) on the state-action space:
///
///   phi(z) = sqrt(2/D) [cos(v_1^T z + b_1), ..., cos(v_D^T z + b_D)]
///
/// with v_i ~ N(0, sigma^-2 I) and b_i ~ U[0, 2 pi). Immutable once built.
class RffMap {
public:
    using Frequencies = Eigen::Matrix<double, Eigen::Dynamic, kStateActionDim>;

    RffMap(Frequencies frequencies, Vector phases, double sigma);

    /// Draws a map from a seed. Frequencies are standard normals scaled by 1/sigma,
    /// so the same seed with a different sigma yields rescaled rows.
    static RffMap draw(Eigen::Index dim, double sigma, std::uint64_t seed);

    Eigen::Index dim() const noexcept { return phases_.size(); }
    double sigma() const noexcept { return sigma_; }
    double scale() const noexcept { return scale_; }
    const Frequencies& frequencies() const noexcept { return frequencies_; }
    const Vector& phases() const noexcept { return phases_; }

    Vector features(const StateAction& z) const;
    Vector features(const StateActionVector& z) const;

    /// Phases of the state part only; see StateProjection.
    StateProjection project(const StateVector& s) const;

    nlohmann::json to_json() const;
    static RffMap from_json(const nlohmann::json& j);

private:
    Frequencies frequencies_;
    Vector phases_;
    double sigma_;
    double scale_;
};

double gaussian_kernel(const StateAction& z, const StateAction& z2, double sigma);

/// Median pairwise Euclidean distance among the given points.
double median_bandwidth(std::span<const StateAction> points);

/// Feature matrix with one column per point. The serial version is the
/// reference for the OpenMP one; both produce identical columns.
Eigen::MatrixXd feature_matrix_serial(const RffMap& map, std::span<const StateAction> points);
Eigen::MatrixXd feature_matrix(const RffMap& map, std::span<const StateAction> points);

} // namespace lmprl
