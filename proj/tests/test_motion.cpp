// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "mif/motion.hpp"
#include "oracles.hpp"

namespace {

using mif::AffineTransform;
using mif::BoundingBox;
using mif::MotionConfig;
using mif::MotionMode;

oracle::CvKalman oracle_from(const BoundingBox& b, const MotionConfig& cfg) {
    oracle::CvKalman k;
    k.dt = cfg.dt;
    k.wp = cfg.std_weight_position;
    k.wv = cfg.std_weight_velocity;
    k.wm = cfg.std_weight_measurement;
    k.x = {b.cx(), b.cy(), b.width(), b.height(), 0, 0, 0, 0};
    const double p = cfg.init_position_factor * k.wp, v = cfg.init_velocity_factor * k.wv;
    const double sd[8] = {p * b.width(), p * b.height(), p * b.width(), p * b.height(),
                          v * b.width(), v * b.height(), v * b.width(), v * b.height()};
    for (int i = 0; i < 8; ++i) k.p[i][i] = sd[i] * sd[i];
    return k;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

TEST(Intensity, IdentityIsZero) {
    EXPECT_EQ(mif::camera_motion_intensity(AffineTransform::identity()), 0.0);
}

TEST(Intensity, TranslationHandValue) {
    // 1 - 2 / sqrt(2 * 102)
    EXPECT_NEAR(mif::camera_motion_intensity(AffineTransform::translation(10, 0)), 0.8599, 1e-4);
}

TEST(Intensity, ScaleInvariantAndMatchesDirectEvaluation) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const AffineTransform w(1 + 0.3 * u(rng), 0.3 * u(rng), 5 * u(rng), 0.3 * u(rng), 1 + 0.3 * u(rng), 5 * u(rng));
        const double base = mif::camera_motion_intensity(w);
        EXPECT_NEAR(base, oracle::intensity(w), 1e-12);
        for (double c : {0.5, 2.0, 10.0}) {
            const auto m = w.matrix();
            const AffineTransform cw(c * m[0][0], c * m[0][1], c * m[0][2], c * m[1][0], c * m[1][1], c * m[1][2]);
            EXPECT_NEAR(mif::camera_motion_intensity(cw), base, 1e-12);
        }
    }
}

TEST(Intensity, ZeroMatrixThrows) {
    EXPECT_THROW(mif::camera_motion_intensity(AffineTransform(0, 0, 0, 0, 0, 0)), mif::ZeroNorm);
}

TEST(Kalman, ReducesToTextbookFilter) {
    MotionConfig cfg;
    cfg.alpha = 1.0;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n01;
    const BoundingBox start = BoundingBox::from_center_size(300, 200, 40, 100);
    auto mine = mif::initiate(start, cfg);
    auto ref = oracle_from(start, cfg);
    double cx = 300, cy = 200;
    for (int cycle = 0; cycle < 300; ++cycle) {
        mine = mif::predict(mine, AffineTransform::identity(), 0.0, cfg);
        ref.predict();
        cx += 1.5;
        cy -= 0.5;
        const auto z = BoundingBox::from_center_size(cx + 2 * n01(rng), cy + 2 * n01(rng), 40 + n01(rng), 100 + 2 * n01(rng));
        mine = mif::update(mine, z, cfg);
        ref.update({z.cx(), z.cy(), z.width(), z.height()});
        for (int i = 0; i < 8; ++i) {
            ASSERT_LE(rel_err(mine.mean[i], ref.x[i]), 1e-9) << "cycle " << cycle << " mean " << i;
            for (int j = 0; j < 8; ++j) {
                ASSERT_LE(rel_err(mine.covariance(i, j), ref.p[i][j]), 1e-9) << "cycle " << cycle;
            }
        }
    }
}

TEST(Kalman, FadingMemoryInflatesPrediction) {
    MotionConfig faded, plain;
    plain.alpha = 1.0;
    faded.alpha = 1.2;
    const auto s = mif::initiate(BoundingBox(0, 0, 20, 50), plain);
    const auto a = mif::predict(s, AffineTransform::identity(), 0.0, plain);
    const auto b = mif::predict(s, AffineTransform::identity(), 0.0, faded);
    for (int i = 0; i < 8; ++i) EXPECT_GT(b.covariance(i, i), a.covariance(i, i));
}

TEST(Kalman, ModesDifferOnlyWhereExpected) {
    MotionConfig cfg;
    auto s = mif::initiate(BoundingBox::from_center_size(100, 100, 20, 40), cfg);
    s.mean[4] = 10.0;  // moving right
    const auto cam = AffineTransform::translation(-5, 0);
    const double ic = mif::camera_motion_intensity(cam);

    cfg.mode = MotionMode::KalmanOnly;
    EXPECT_NEAR(mif::predict(s, cam, ic, cfg).mean[0], 100 + cfg.dt * 10, 1e-9);
    cfg.mode = MotionMode::KalmanPlusEcc;
    EXPECT_NEAR(mif::predict(s, cam, ic, cfg).mean[0], 100 + cfg.dt * 10 - 5, 1e-9);
    cfg.mode = MotionMode::Integrated;
    EXPECT_NEAR(mif::predict(s, cam, ic, cfg).mean[0], 100 + (cfg.dt + ic) * 10 - 5, 1e-9);
    cfg.mode = MotionMode::EccOnly;
    const auto e = mif::predict(s, cam, ic, cfg);
    EXPECT_NEAR(e.mean[0], 95, 1e-9);
    EXPECT_EQ(e.mean[4], 0.0);
}

TEST(Kalman, CameraWarpRotatesVelocity) {
    MotionConfig cfg;
    cfg.mode = MotionMode::KalmanPlusEcc;
    auto s = mif::initiate(BoundingBox::from_center_size(0, 0, 10, 10), cfg);
    s.mean[4] = 1.0;
    const auto out = mif::predict(s, AffineTransform(0, -1, 0, 1, 0, 0), 0.0, cfg);
    EXPECT_NEAR(out.mean[4], 0.0, 1e-12);
    EXPECT_NEAR(out.mean[5], 1.0, 1e-12);
}

TEST(Kalman, CovarianceStaysPositiveSemidefinite) {
    MotionConfig cfg;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    auto s = mif::initiate(BoundingBox::from_center_size(500, 300, 30, 80), cfg);
    for (int i = 0; i < 500; ++i) {
        const auto cam = AffineTransform(1 + 0.01 * n01(rng), 0.01 * n01(rng), 3 * n01(rng), 0.01 * n01(rng),
                                         1 + 0.01 * n01(rng), 3 * n01(rng));
        s = mif::predict(s, cam, mif::camera_motion_intensity(cam), cfg);
        if (i % 3 != 0) {
            s = mif::update(s, s.box(), cfg);
        }
        oracle::M8 p;
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) p[r][c] = s.covariance(r, c);
        ASSERT_GE(oracle::min_eigenvalue(p), -1e-8);
    }
}

TEST(Kalman, MahalanobisZeroAtMeanAndGateValue) {
    MotionConfig cfg;
    const auto s = mif::predict(mif::initiate(BoundingBox(10, 10, 30, 60), cfg), AffineTransform::identity(), 0, cfg);
    EXPECT_NEAR(mif::mahalanobis(s, s.box(), cfg), 0.0, 1e-12);
    EXPECT_GT(mif::mahalanobis(s, BoundingBox(300, 300, 320, 350), cfg), mif::kChi2Gate4);
}

TEST(Kalman, SizeFloorHolds) {
    MotionConfig cfg;
    auto s = mif::initiate(BoundingBox(0, 0, 4, 4), cfg);
    s.mean[6] = s.mean[7] = -1000.0;
    const auto out = mif::predict(s, AffineTransform::identity(), 0.0, cfg);
    EXPECT_GE(out.mean[2], cfg.min_size);
    EXPECT_GE(out.mean[3], cfg.min_size);
}

TEST(Kalman, RejectsBadInputs) {
    MotionConfig cfg;
    const auto s = mif::initiate(BoundingBox(0, 0, 4, 4), cfg);
    EXPECT_THROW(mif::predict(s, AffineTransform::identity(), -0.1, cfg), mif::InvalidArgument);
    EXPECT_THROW(mif::predict(s, AffineTransform(0, 0, 0, 0, 0, 0), 1.0, cfg), mif::DegenerateTransform);
    MotionConfig bad;
    bad.alpha = 0.9;
    EXPECT_THROW(bad.validate(), mif::InvalidArgument);
    EXPECT_THROW(mif::parse_motion_mode("fast"), mif::InvalidArgument);
}

}  // namespace
