// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "mif/error.hpp"

namespace mif {

/// Axis-aligned box in corner form. Corner form is canonical; the center-size
/// view is what the Kalman filter consumes.
class BoundingBox {
public:
    BoundingBox() = default;

    /// Throws InvalidArgument unless x1 < x2 and y1 < y2 (finite).
    BoundingBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
        if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2)) ||
            !(x2 > x1) || !(y2 > y1)) {
            throw InvalidArgument("BoundingBox requires x1 < x2 and y1 < y2");
        }
    }

    static BoundingBox from_center_size(double cx, double cy, double w, double h) {
        return BoundingBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
    }

    static BoundingBox from_tlwh(double x, double y, double w, double h) {
        return BoundingBox(x, y, x + w, y + h);
    }

    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }

    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }
    double cx() const noexcept { return 0.5 * (x1_ + x2_); }
    double cy() const noexcept { return 0.5 * (y1_ + y2_); }
    double aspect() const noexcept { return height() / width(); }

    /// [cx, cy, w, h]
    std::array<double, 4> center_size() const noexcept { return {cx(), cy(), width(), height()}; }

    /// Box scaled by `factor` about its center.
    BoundingBox expanded(double factor) const {
        return from_center_size(cx(), cy(), width() * factor, height() * factor);
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

private:
    double x1_ = 0.0;
    double y1_ = 0.0;
    double x2_ = 1.0;
    double y2_ = 1.0;
};

/// Intersection area, 0 when the boxes do not overlap.
inline double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) {
        return 0.0;
    }
    return inter / (a.area() + b.area() - inter);
}

/// Clips to [0,w]x[0,h]. Empty result when nothing of the box lies inside.
inline std::optional<BoundingBox> clip_box(const BoundingBox& b, double image_w, double image_h) {
    const double x1 = std::max(b.x1(), 0.0);
    const double y1 = std::max(b.y1(), 0.0);
    const double x2 = std::min(b.x2(), image_w);
    const double y2 = std::min(b.y2(), image_h);
    if (!(x2 > x1) || !(y2 > y1)) {
        return std::nullopt;
    }
    return BoundingBox(x1, y1, x2, y2);
}

struct Detection {
    BoundingBox box;
    double score = 1.0;
    std::vector<float> feature;  // empty when no appearance feature is available
    double visibility = 1.0;

    bool has_feature() const noexcept { return !feature.empty(); }
};

/// 2x3 affine warp mapping homogeneous pixel coordinates of frame t into frame t+1.
class AffineTransform {
public:
    using Matrix = std::array<std::array<double, 3>, 2>;

    AffineTransform() = default;
    explicit AffineTransform(const Matrix& m) : m_(m) {}
    AffineTransform(double m00, double m01, double m02, double m10, double m11, double m12)
        : m_{{{m00, m01, m02}, {m10, m11, m12}}} {}

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(double tx, double ty) { return {1, 0, tx, 0, 1, ty}; }
    static AffineTransform scaling(double s) { return {s, 0, 0, 0, s, 0}; }

    /// Uniform scale `s` about the point (cx, cy).
    static AffineTransform scaling_about(double s, double cx, double cy) {
        return {s, 0, cx - s * cx, 0, s, cy - s * cy};
    }

    double operator()(int r, int c) const { return m_[r][c]; }
    const Matrix& matrix() const noexcept { return m_; }

    double determinant() const noexcept { return m_[0][0] * m_[1][1] - m_[0][1] * m_[1][0]; }

    std::array<double, 2> apply(double x, double y) const noexcept {
        return {m_[0][0] * x + m_[0][1] * y + m_[0][2], m_[1][0] * x + m_[1][1] * y + m_[1][2]};
    }

    /// Linear part only (no translation); used for velocities.
    std::array<double, 2> apply_linear(double x, double y) const noexcept {
        return {m_[0][0] * x + m_[0][1] * y, m_[1][0] * x + m_[1][1] * y};
    }

    /// Throws DegenerateTransform when the linear part is singular.
    AffineTransform inverse() const {
        const double det = determinant();
        if (std::abs(det) < 1e-12) {
            throw DegenerateTransform("affine transform is not invertible");
        }
        const double a = m_[1][1] / det;
        const double b = -m_[0][1] / det;
        const double d = -m_[1][0] / det;
        const double e = m_[0][0] / det;
        return {a, b, -(a * m_[0][2] + b * m_[1][2]), d, e, -(d * m_[0][2] + e * m_[1][2])};
    }

    bool is_finite() const noexcept {
        for (const auto& row : m_) {
            for (double v : row) {
                if (!std::isfinite(v)) {
                    return false;
                }
            }
        }
        return true;
    }

    friend bool operator==(const AffineTransform&, const AffineTransform&) = default;

private:
    Matrix m_{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}};
};

/// compose(outer, inner) applies `inner` first, then `outer`.
inline AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner) {
    AffineTransform::Matrix r{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
            r[i][j] = outer(i, 0) * inner(0, j) + outer(i, 1) * inner(1, j);
        }
        r[i][2] += outer(i, 2);
    }
    return AffineTransform(r);
}

/// Row-major flatten [m00, m01, m02, m10, m11, m12].
inline std::array<double, 6> vectorize_affine(const AffineTransform& t) noexcept {
    return {t(0, 0), t(0, 1), t(0, 2), t(1, 0), t(1, 1), t(1, 2)};
}

/// Maps the four corners through `t` and refits the axis-aligned box around them.
inline BoundingBox warp_box(const BoundingBox& box, const AffineTransform& t) {
    if (std::abs(t.determinant()) < 1e-12) {
        throw DegenerateTransform("warp_box: |det| of the linear part is below 1e-12");
    }
    const std::array<std::array<double, 2>, 4> corners = {
        t.apply(box.x1(), box.y1()), t.apply(box.x2(), box.y1()),
        t.apply(box.x1(), box.y2()), t.apply(box.x2(), box.y2())};
    double x1 = corners[0][0], x2 = corners[0][0];
    double y1 = corners[0][1], y2 = corners[0][1];
    for (const auto& c : corners) {
        x1 = std::min(x1, c[0]);
        x2 = std::max(x2, c[0]);
        y1 = std::min(y1, c[1]);
        y2 = std::max(y2, c[1]);
    }
    return BoundingBox(x1, y1, x2, y2);
}

}  // namespace mif
