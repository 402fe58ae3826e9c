// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. They avoid the library's own
// helpers (and Eigen) so that agreement is evidence, not tautology.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mif/core_types.hpp"
#include "mif/spatial_index.hpp"

namespace oracle {

// ------------------------------------------------------------ Kalman filter

using V8 = std::array<double, 8>;
using M8 = std::array<std::array<double, 8>, 8>;

/// Textbook constant-velocity filter over [cx, cy, w, h, vcx, vcy, vw, vh] with
/// step `dt`, size-proportional diagonal noises and the plain (I - KH) P update.
struct CvKalman {
    double dt = 0.15;
    double wp = 1.0 / 20.0, wv = 1.0 / 24.0, wm = 1.0 / 20.0;
    V8 x{};
    M8 p{};

    void predict() {
        const double w = x[2], h = x[3];
        const double q[8] = {wp * w, wp * h, wp * w, wp * h, wv * w, wv * h, wv * w, wv * h};
        V8 nx = x;
        for (int i = 0; i < 4; ++i) nx[i] += dt * x[4 + i];
        // P = F P F^T with F = [[I, dt I], [0, I]]
        M8 fp{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) fp[i][j] = p[i][j] + (i < 4 ? dt * p[i + 4][j] : 0.0);
        M8 np{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) np[i][j] = fp[i][j] + (j < 4 ? dt * fp[i][j + 4] : 0.0);
        for (int i = 0; i < 8; ++i) np[i][i] += q[i] * q[i];
        x = nx;
        p = np;
    }

    void update(const std::array<double, 4>& z) {
        const double w = x[2], h = x[3];
        const double r[4] = {wm * w, wm * h, wm * w, wm * h};
        double s[4][4];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) s[i][j] = p[i][j] + (i == j ? r[i] * r[i] : 0.0);
        double si[4][4];
        invert4(s, si);
        double k[8][4];  // K = P H^T S^-1
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 4; ++j) {
                k[i][j] = 0.0;
                for (int l = 0; l < 4; ++l) k[i][j] += p[i][l] * si[l][j];
            }
        double y[4];
        for (int i = 0; i < 4; ++i) y[i] = z[i] - x[i];
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 4; ++j) x[i] += k[i][j] * y[j];
        M8 np{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                double khp = 0.0;
                for (int l = 0; l < 4; ++l) khp += k[i][l] * p[l][j];
                np[i][j] = p[i][j] - khp;
            }
        p = np;
    }

    /// Gauss-Jordan with partial pivoting.
    static void invert4(const double (&a)[4][4], double (&out)[4][4]) {
        double m[4][8];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 8; ++j) m[i][j] = j < 4 ? a[i][j] : (j - 4 == i ? 1.0 : 0.0);
        for (int c = 0; c < 4; ++c) {
            int piv = c;
            for (int r = c + 1; r < 4; ++r)
                if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
            std::swap(m[c], m[piv]);
            const double d = m[c][c];
            for (double& v : m[c]) v /= d;
            for (int r = 0; r < 4; ++r) {
                if (r == c) continue;
                const double f = m[r][c];
                for (int j = 0; j < 8; ++j) m[r][j] -= f * m[c][j];
            }
        }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out[i][j] = m[i][j + 4];
    }
};

/// Smallest eigenvalue of a symmetric 8x8 matrix (cyclic Jacobi).
inline double min_eigenvalue(M8 a) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < 8; ++i)
            for (int j = i + 1; j < 8; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-30) break;
        for (int p = 0; p < 8; ++p)
            for (int q = p + 1; q < 8; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < 8; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 8; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    double lo = a[0][0];
    for (int i = 1; i < 8; ++i) lo = std::min(lo, a[i][i]);
    return lo;
}

// ------------------------------------------------------------ camera motion

/// 1 - cos(vec(W), [1 0 0 0 1 0]), evaluated term by term.
inline double intensity(const mif::AffineTransform& t) {
    const double w[6] = {t(0, 0), t(0, 1), t(0, 2), t(1, 0), t(1, 1), t(1, 2)};
    const double e[6] = {1, 0, 0, 0, 1, 0};
    double dot = 0, nw = 0, ne = 0;
    for (int i = 0; i < 6; ++i) {
        dot += w[i] * e[i];
        nw += w[i] * w[i];
        ne += e[i] * e[i];
    }
    return 1.0 - dot / (std::sqrt(nw) * std::sqrt(ne));
}

// ------------------------------------------------------------ spatial blocking

/// Detections whose cell range shares a cell with the query's cell range.
inline std::vector<int> cell_overlap(const mif::GridGeometry& g, const std::vector<mif::BoundingBox>& dets,
                                     const mif::BoundingBox& q) {
    auto range = [&](const mif::BoundingBox& b, int& m0, int& m1, int& n0, int& n1) {
        const double x1 = std::max(b.x1(), 0.0), x2 = std::min(b.x2(), g.image_w());
        const double y1 = std::max(b.y1(), 0.0), y2 = std::min(b.y2(), g.image_h());
        if (!(x2 > x1 && y2 > y1)) return false;
        const double cw = g.image_w() / g.m_cells(), ch = g.image_h() / g.n_cells();
        m0 = std::clamp(static_cast<int>(std::floor(x1 / cw)), 0, g.m_cells() - 1);
        m1 = std::clamp(static_cast<int>(std::ceil(x2 / cw)) - 1, 0, g.m_cells() - 1);
        n0 = std::clamp(static_cast<int>(std::floor(y1 / ch)), 0, g.n_cells() - 1);
        n1 = std::clamp(static_cast<int>(std::ceil(y2 / ch)) - 1, 0, g.n_cells() - 1);
        return true;
    };
    std::vector<int> out;
    int qm0, qm1, qn0, qn1;
    if (!range(q, qm0, qm1, qn0, qn1)) return out;
    for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
        int m0, m1, n0, n1;
        if (!range(dets[d], m0, m1, n0, n1)) continue;
        bool hit = false;
        for (int m = qm0; m <= qm1 && !hit; ++m)
            for (int n = qn0; n <= qn1 && !hit; ++n) hit = m >= m0 && m <= m1 && n >= n0 && n <= n1;
        if (hit) out.push_back(d);
    }
    return out;
}

// ------------------------------------------------------------ assignment

/// Minimum total over all assignments that match min(rows, cols) pairs, by
/// enumerating permutations of the longer side.
inline double exhaustive_min(const std::vector<std::vector<double>>& c) {
    const std::size_t rows = c.size(), cols = c.empty() ? 0 : c[0].size();
    const bool by_rows = rows <= cols;
    const std::size_t k = std::min(rows, cols), n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += by_rows ? c[i][perm[i]] : c[perm[i]][i];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace oracle
