// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "mif/core_types.hpp"

namespace mif {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

/// How predict() combines the pedestrian model with camera motion.
enum class MotionMode {
    KalmanOnly,     // constant velocity, no camera compensation
    EccOnly,        // camera warp of the position only, velocities dropped
    KalmanPlusEcc,  // constant-velocity predict, then camera warp
    Integrated,     // step stretched by the camera-motion intensity, then camera warp
};

inline std::string_view to_string(MotionMode m) {
    switch (m) {
        case MotionMode::KalmanOnly: return "kalman_only";
        case MotionMode::EccOnly: return "ecc_only";
        case MotionMode::KalmanPlusEcc: return "kalman_plus_ecc";
        case MotionMode::Integrated: return "integrated";
    }
    return "integrated";
}

inline MotionMode parse_motion_mode(std::string_view s) {
    if (s == "kalman_only") return MotionMode::KalmanOnly;
    if (s == "ecc_only") return MotionMode::EccOnly;
    if (s == "kalman_plus_ecc") return MotionMode::KalmanPlusEcc;
    if (s == "integrated") return MotionMode::Integrated;
    throw InvalidArgument("unknown motion mode '" + std::string(s) + "'");
}

/// Noise standard deviations are expressed as fractions of the box size, so a
/// track's uncertainty scales with its apparent size.
struct MotionConfig {
    double alpha = 1.2;  // fading memory
    double dt = 0.15;
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 24.0;
    double std_weight_measurement = 1.0 / 20.0;
    double init_position_factor = 2.0;   // initial position std = factor * weight * size
    double init_velocity_factor = 10.0;  // initial velocity std = factor * weight * size
    double min_size = 1.0;               // width/height floor in pixels
    MotionMode mode = MotionMode::Integrated;

    void validate() const {
        if (!(alpha >= 1.0) || !(dt > 0.0) || std_weight_position < 0.0 || std_weight_velocity < 0.0 ||
            std_weight_measurement < 0.0 || !(min_size > 0.0)) {
            throw InvalidArgument("MotionConfig: alpha >= 1, dt > 0, non-negative noise weights required");
        }
    }
};

/// Kalman state [cx, cy, w, h, vcx, vcy, vw, vh] with its covariance.
struct KalmanState {
    Vec8 mean = Vec8::Zero();
    Mat8 covariance = Mat8::Identity();

    BoundingBox box() const { return BoundingBox::from_center_size(mean[0], mean[1], mean[2], mean[3]); }
    Vec4 position() const { return mean.head<4>(); }
};

inline Vec4 measurement_vector(const BoundingBox& b) {
    return Vec4(b.cx(), b.cy(), b.width(), b.height());
}

/// Block transition [[I, step*I], [0, I]].
inline Mat8 transition_matrix(double step) {
    Mat8 f = Mat8::Identity();
    for (int i = 0; i < 4; ++i) {
        f(i, 4 + i) = step;
    }
    return f;
}

inline Mat8 process_noise(const Vec8& mean, const MotionConfig& cfg) {
    const double w = mean[2], h = mean[3];
    const double p = cfg.std_weight_position, v = cfg.std_weight_velocity;
    Vec8 std;
    std << p * w, p * h, p * w, p * h, v * w, v * h, v * w, v * h;
    return std.array().square().matrix().asDiagonal();
}

inline Mat4 measurement_noise(const Vec8& mean, const MotionConfig& cfg) {
    const double w = mean[2], h = mean[3];
    const double m = cfg.std_weight_measurement;
    Vec4 std(m * w, m * h, m * w, m * h);
    return std.array().square().matrix().asDiagonal();
}

/// New track state from a first observation; velocities start at zero.
inline KalmanState initiate(const BoundingBox& box, const MotionConfig& cfg) {
    KalmanState s;
    s.mean.head<4>() = measurement_vector(box);
    const double w = box.width(), h = box.height();
    const double p = cfg.init_position_factor * cfg.std_weight_position;
    const double v = cfg.init_velocity_factor * cfg.std_weight_velocity;
    Vec8 std;
    std << p * w, p * h, p * w, p * h, v * w, v * h, v * w, v * h;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
}

/// Cosine distance between the vectorized warp and the static-camera warp
/// [1 0 0 0 1 0]. 0 for a static camera, 2 for a point reflection.
inline double camera_motion_intensity(const AffineTransform& t) {
    const auto w = vectorize_affine(t);
    double norm2 = 0.0;
    for (double v : w) {
        norm2 += v * v;
    }
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw ZeroNorm("camera_motion_intensity: affine has zero (or non-finite) norm");
    }
    const double dot = w[0] + w[4];
    const double cosine = dot / std::sqrt(norm2 * 2.0);
    return std::clamp(1.0 - cosine, 0.0, 2.0);
}

namespace detail {

inline void clamp_size(Vec8& mean, double floor) {
    mean[2] = std::max(mean[2], floor);
    mean[3] = std::max(mean[3], floor);
}

inline void symmetrize(Mat8& p) {
    p = 0.5 * (p + p.transpose()).eval();
}

/// Moves the state into the next frame's coordinates: box through warp_box,
/// planar velocity through the linear part.
inline void warp_state(Vec8& mean, const AffineTransform& t) {
    const BoundingBox b = warp_box(BoundingBox::from_center_size(mean[0], mean[1], mean[2], mean[3]), t);
    mean[0] = b.cx();
    mean[1] = b.cy();
    mean[2] = b.width();
    mean[3] = b.height();
    const auto v = t.apply_linear(mean[4], mean[5]);
    mean[4] = v[0];
    mean[5] = v[1];
}

}  // namespace detail

/// One prediction step. `camera` maps the previous frame into the current one and
/// `intensity` is its camera_motion_intensity(). Throws DegenerateTransform when a
/// warping mode receives a singular camera transform.
inline KalmanState predict(const KalmanState& state, const AffineTransform& camera, double intensity,
                           const MotionConfig& cfg) {
    if (!(intensity >= 0.0)) {
        throw InvalidArgument("predict: camera motion intensity must be >= 0");
    }
    // Noise is sized from the box the track had before the step.
    const Mat8 q = process_noise(state.mean, cfg);
    KalmanState out;
    if (cfg.mode == MotionMode::EccOnly) {
        out.mean = state.mean;
        out.mean.tail<4>().setZero();
        detail::warp_state(out.mean, camera);
        out.covariance = state.covariance + q;
    } else {
        const double step = cfg.dt + (cfg.mode == MotionMode::Integrated ? intensity : 0.0);
        const Mat8 f = transition_matrix(step);
        out.mean = f * state.mean;
        out.covariance = cfg.alpha * f * state.covariance * f.transpose() + q;
        if (cfg.mode != MotionMode::KalmanOnly) {
            detail::clamp_size(out.mean, cfg.min_size);  // warp_box needs a valid box
            detail::warp_state(out.mean, camera);
        }
    }
    detail::clamp_size(out.mean, cfg.min_size);
    detail::symmetrize(out.covariance);
    return out;
}

/// Projected measurement mean and innovation covariance S = H P H^T + R.
inline std::pair<Vec4, Mat4> project(const KalmanState& state, const MotionConfig& cfg) {
    return {state.mean.head<4>(), state.covariance.topLeftCorner<4, 4>() + measurement_noise(state.mean, cfg)};
}

/// Kalman correction with H = [I 0], covariance in Joseph form.
/// Throws SingularInnovation when S cannot be factorized.
inline KalmanState update(const KalmanState& state, const BoundingBox& measurement, const MotionConfig& cfg) {
    const auto [z_pred, s] = project(state, cfg);
    Eigen::LLT<Mat4> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovation("update: innovation covariance is not positive definite");
    }
    const Mat4 r = measurement_noise(state.mean, cfg);
    // K = P H^T S^-1, solved as S K^T = H P
    const Eigen::Matrix<double, 8, 4> pht = state.covariance.leftCols<4>();
    const Eigen::Matrix<double, 8, 4> k = llt.solve(pht.transpose()).transpose();
    const Vec4 innovation = measurement_vector(measurement) - z_pred;

    KalmanState out;
    out.mean = state.mean + k * innovation;
    Mat8 ikh = Mat8::Identity();
    ikh.leftCols<4>() -= k;
    out.covariance = ikh * state.covariance * ikh.transpose() + k * r * k.transpose();
    detail::clamp_size(out.mean, cfg.min_size);
    detail::symmetrize(out.covariance);
    return out;
}

/// Squared Mahalanobis distance (4 dof) between a detection and the predicted measurement.
inline double mahalanobis(const KalmanState& state, const BoundingBox& det, const MotionConfig& cfg) {
    const auto [z_pred, s] = project(state, cfg);
    Eigen::LLT<Mat4> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovation("mahalanobis: innovation covariance is not positive definite");
    }
    const Vec4 d = measurement_vector(det) - z_pred;
    const Vec4 l = llt.matrixL().solve(d);
    return l.squaredNorm();
}

/// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
inline constexpr double kChi2Gate4 = 9.4877;

}  // namespace mif
