// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mif/core_types.hpp"
#include "mif/image.hpp"
#include "mif/text.hpp"

namespace mif {

struct EccParams {
    int max_iterations = 50;
    double epsilon = 1e-5;  // stop once the correlation gain drops below this
    int pyramid_levels = 3;
    double gaussian_blur_sigma = 1.0;

    void validate() const {
        if (max_iterations < 1 || pyramid_levels < 1 || !(epsilon > 0.0)) {
            throw InvalidArgument("EccParams: max_iterations >= 1, pyramid_levels >= 1, epsilon > 0 required");
        }
    }
};

struct EccResult {
    AffineTransform transform;  // maps prev-frame pixels into the current frame
    bool converged = false;
    double correlation = 0.0;  // enhanced correlation coefficient at the returned warp (finest level)
    /// Correlation of every accepted iterate, one list per pyramid level (coarse first).
    std::vector<std::vector<double>> level_trace;
};

namespace detail {

struct EccLevelOutcome {
    bool converged = false;
    double correlation = 0.0;
};

/// Forward-additive ECC iterations on one pyramid level. `p` holds the row-major
/// warp [m00 m01 m02 m10 m11 m12] and is updated in place.
inline EccLevelOutcome ecc_level(const GrayImage& tmpl, const GrayImage& image, const GrayImage& gx,
                                 const GrayImage& gy, Eigen::Matrix<double, 6, 1>& p, const EccParams& params,
                                 std::vector<double>& trace) {
    using Vec6 = Eigen::Matrix<double, 6, 1>;
    using Mat6 = Eigen::Matrix<double, 6, 6>;

    const int w = tmpl.width();
    const int h = tmpl.height();
    const std::size_t n_px = static_cast<std::size_t>(w) * h;
    std::vector<double> tv, iv;
    std::vector<Vec6> jac;
    tv.reserve(n_px);
    iv.reserve(n_px);
    jac.reserve(n_px);

    EccLevelOutcome outcome;
    double prev_ecc = -2.0;
    Vec6 prev_p = p;
    int halvings = 0;
    constexpr int kMaxHalvings = 6;

    for (int iter = 0; iter <= params.max_iterations; ++iter) {
        tv.clear();
        iv.clear();
        jac.clear();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double wx = p[0] * x + p[1] * y + p[2];
                const double wy = p[3] * x + p[4] * y + p[5];
                float iw = 0.0f, gxw = 0.0f, gyw = 0.0f;
                if (!image.sample(wx, wy, iw)) {
                    continue;
                }
                gx.sample(wx, wy, gxw);
                gy.sample(wx, wy, gyw);
                tv.push_back(tmpl.at(x, y));
                iv.push_back(iw);
                Vec6 j;
                j << gxw * x, gxw * y, gxw, gyw * x, gyw * y, gyw;
                jac.push_back(j);
            }
        }
        const std::size_t n = tv.size();
        if (n < 16) {
            // warp left the image; keep the last good estimate
            p = prev_p;
            break;
        }
        double tmean = 0.0, imean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            tmean += tv[i];
            imean += iv[i];
        }
        tmean /= static_cast<double>(n);
        imean /= static_cast<double>(n);

        Mat6 hessian = Mat6::Zero();
        Vec6 img_proj = Vec6::Zero();
        Vec6 tmpl_proj = Vec6::Zero();
        double tnorm2 = 0.0, inorm2 = 0.0, corr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double tz = tv[i] - tmean;
            const double iz = iv[i] - imean;
            tnorm2 += tz * tz;
            inorm2 += iz * iz;
            corr += tz * iz;
            hessian.selfadjointView<Eigen::Lower>().rankUpdate(jac[i]);
            img_proj += jac[i] * iz;
            tmpl_proj += jac[i] * tz;
        }
        hessian = hessian.selfadjointView<Eigen::Lower>();
        if (tnorm2 <= 1e-18 || inorm2 <= 1e-18) {
            throw SingularHessian("ECC: image has no intensity variation");
        }
        const double ecc = corr / std::sqrt(tnorm2 * inorm2);

        if (iter > 0 && ecc < prev_ecc) {
            // rejected step: backtrack towards the last accepted warp
            if (++halvings > kMaxHalvings) {
                p = prev_p;
                outcome.converged = true;
                break;
            }
            p = prev_p + 0.5 * (p - prev_p);
            continue;
        }
        halvings = 0;
        trace.push_back(ecc);
        outcome.correlation = ecc;
        if (iter > 0 && ecc - prev_ecc < params.epsilon) {
            outcome.converged = true;
            break;
        }
        if (iter == params.max_iterations) {
            break;
        }

        Eigen::LDLT<Mat6> ldlt(hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || std::abs(ldlt.vectorD().minCoeff()) < 1e-12) {
            throw SingularHessian("ECC: Hessian is singular (no gradient information)");
        }
        const Vec6 iph = ldlt.solve(img_proj);
        const double lambda_n = inorm2 - img_proj.dot(iph);
        const double lambda_d = corr - tmpl_proj.dot(iph);
        if (lambda_d <= 0.0) {
            break;
        }
        const double lambda = lambda_n / lambda_d;
        Vec6 err_proj = Vec6::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double e = lambda * (tv[i] - tmean) - (iv[i] - imean);
            err_proj += jac[i] * e;
        }
        prev_p = p;
        prev_ecc = ecc;
        p += ldlt.solve(err_proj);
    }
    return outcome;
}

}  // namespace detail

/// Expresses a warp estimated on a 2x-downsampled pair at the finer resolution.
/// Coarse pixel x covers fine pixels 2x and 2x + 1, so it sits at 2x + 0.5.
inline AffineTransform upsample_affine(const AffineTransform& t) {
    return AffineTransform(t(0, 0), t(0, 1), 2.0 * t(0, 2) + 0.5 * (1.0 - t(0, 0) - t(0, 1)),
                           t(1, 0), t(1, 1), 2.0 * t(1, 2) + 0.5 * (1.0 - t(1, 0) - t(1, 1)));
}

/// Estimates the affine warp W with cur(W x) ~ prev(x) by coarse-to-fine ECC maximization.
///
/// Throws DimensionMismatch when the frames differ in size or are smaller than 8x8 and
/// SingularHessian when a frame carries no gradient information (callers usually fall
/// back to identity). When the optimizer cannot improve further the best warp so far is
/// returned with `converged` reflecting whether the epsilon criterion was met.
inline EccResult estimate_affine(const GrayImage& prev, const GrayImage& cur, const EccParams& params = {}) {
    params.validate();
    if (prev.width() != cur.width() || prev.height() != cur.height()) {
        throw DimensionMismatch("estimate_affine: frames must have identical dimensions");
    }
    if (prev.width() < 8 || prev.height() < 8) {
        throw DimensionMismatch("estimate_affine: frames must be at least 8x8");
    }

    std::vector<GrayImage> tp{prev}, ip{cur};
    for (int l = 1; l < params.pyramid_levels; ++l) {
        if (tp.back().width() < 32 || tp.back().height() < 32) {
            break;
        }
        tp.push_back(downsample2(tp.back()));
        ip.push_back(downsample2(ip.back()));
    }

    Eigen::Matrix<double, 6, 1> p;
    p << 1, 0, 0, 0, 1, 0;
    EccResult result;
    for (int l = static_cast<int>(tp.size()) - 1; l >= 0; --l) {
        const GrayImage t = gaussian_blur(tp[l], params.gaussian_blur_sigma);
        const GrayImage i = gaussian_blur(ip[l], params.gaussian_blur_sigma);
        GrayImage gx, gy;
        gradients(i, gx, gy);
        std::vector<double> trace;
        const auto outcome = detail::ecc_level(t, i, gx, gy, p, params, trace);
        result.level_trace.push_back(std::move(trace));
        result.converged = outcome.converged;
        result.correlation = outcome.correlation;
        if (l > 0) {
            const auto up = upsample_affine(AffineTransform(p[0], p[1], p[2], p[3], p[4], p[5]));
            p[2] = up(0, 2);
            p[5] = up(1, 2);
        }
    }
    result.transform = AffineTransform(p[0], p[1], p[2], p[3], p[4], p[5]);
    return result;
}

/// ECC on frames halved `downscale` times; the warp is mapped back to full resolution.
inline EccResult estimate_affine_downscaled(GrayImage prev, GrayImage cur, const EccParams& params, int downscale) {
    if (downscale < 0) {
        throw InvalidArgument("estimate_affine_downscaled: downscale must be >= 0");
    }
    for (int k = 0; k < downscale; ++k) {
        prev = downsample2(prev);
        cur = downsample2(cur);
    }
    EccResult r = estimate_affine(prev, cur, params);
    for (int k = 0; k < downscale; ++k) {
        r.transform = upsample_affine(r.transform);
    }
    return r;
}

/// Reads one affine per line: `m00 m01 m02 m10 m11 m12`. Line k maps frame k to k+1.
/// Blank lines are ignored.
inline std::vector<AffineTransform> load_affines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open affine file: " + path);
    }
    std::vector<AffineTransform> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::is_blank(line)) {
            continue;
        }
        const auto fields = text::split(line, " \t\r", true);
        if (fields.size() != 6) {
            throw ParseError(path, lineno, "expected 6 fields, got " + std::to_string(fields.size()));
        }
        double v[6];
        for (int i = 0; i < 6; ++i) {
            if (!text::parse_double(fields[i], v[i])) {
                throw ParseError(path, lineno, "invalid number '" + std::string(fields[i]) + "'");
            }
        }
        out.emplace_back(v[0], v[1], v[2], v[3], v[4], v[5]);
    }
    return out;
}

inline void save_affines(const std::vector<AffineTransform>& affines, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write affine file: " + path);
    }
    for (const auto& a : affines) {
        const auto v = vectorize_affine(a);
        for (int i = 0; i < 6; ++i) {
            out << (i ? " " : "") << text::format_double(v[i]);
        }
        out << '\n';
    }
}

}  // namespace mif
