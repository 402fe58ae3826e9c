// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "mif/association.hpp"
#include "oracles.hpp"

namespace {

using mif::Assignment;
using mif::BoundingBox;
using mif::CostMatrix;

CostMatrix from_rows(const std::vector<std::vector<double>>& v) {
    CostMatrix m(v.size(), v.empty() ? 0 : v[0].size());
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v[r].size(); ++c) m(r, c) = v[r][c];
    return m;
}

TEST(BlendCost, WeightDecaysWithTimeGap) {
    EXPECT_DOUBLE_EQ(mif::blend_cost(0.2, 0.9, 0, 0.8), 0.2);
    EXPECT_DOUBLE_EQ(mif::blend_cost(0.2, 0.9, 1, 0.8), 0.8 * 0.2 + 0.2 * 0.9);
    EXPECT_NEAR(mif::blend_cost(0.0, 1.0, 50, 0.8), 1.0, 1e-4);
}

TEST(NormalizedMotionDistance, ClampedToUnit) {
    EXPECT_DOUBLE_EQ(mif::normalized_motion_distance(0.0), 0.0);
    EXPECT_DOUBLE_EQ(mif::normalized_motion_distance(mif::kChi2Gate4 / 2), 0.5);
    EXPECT_DOUBLE_EQ(mif::normalized_motion_distance(100.0), 1.0);
}

TEST(Hungarian, MatchesExhaustiveMinimum) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dim(1, 7);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 300; ++trial) {
        const int r = dim(rng), c = dim(rng);
        std::vector<std::vector<double>> v(r, std::vector<double>(c));
        for (auto& row : v)
            for (double& x : row) x = u(rng);
        const Assignment a = mif::assign(from_rows(v));
        EXPECT_EQ(static_cast<int>(a.matches.size()), std::min(r, c));
        EXPECT_NEAR(a.total_cost, oracle::exhaustive_min(v), 1e-9);
    }
}

TEST(Hungarian, NeverReturnsInfeasiblePairs) {
    const double X = CostMatrix::kInfeasible;
    const auto a = mif::assign(from_rows({{X, 1.0}, {X, 0.5}, {2.0, X}}));
    for (const auto& [r, c] : a.matches) EXPECT_TRUE(std::isfinite(from_rows({{X, 1.0}, {X, 0.5}, {2.0, X}})(r, c)));
    ASSERT_EQ(a.matches.size(), 2u);
    EXPECT_EQ(a.matches[0], std::make_pair(1, 1));
    EXPECT_EQ(a.matches[1], std::make_pair(2, 0));
    EXPECT_EQ(a.unmatched_rows, std::vector<int>{0});
}

TEST(Hungarian, PrefersMoreFeasiblePairs) {
    const double X = CostMatrix::kInfeasible;
    // a lone cheap pair (0,0) would leave row 1 unmatched
    const auto a = mif::assign(from_rows({{0.1, 0.9}, {0.2, X}}));
    ASSERT_EQ(a.matches.size(), 2u);
    EXPECT_EQ(a.matches[0], std::make_pair(0, 1));
}

TEST(Hungarian, AllInfeasibleAndEmpty) {
    const auto a = mif::assign(CostMatrix(3, 2));
    EXPECT_TRUE(a.matches.empty());
    EXPECT_EQ(a.unmatched_rows.size(), 3u);
    EXPECT_EQ(a.unmatched_cols.size(), 2u);
    EXPECT_TRUE(mif::assign(CostMatrix(0, 4)).matches.empty());
}

TEST(Hungarian, TiesBreakTowardLowerIds) {
    const auto a = mif::assign(from_rows({{1, 1}, {1, 1}}));
    ASSERT_EQ(a.matches.size(), 2u);
    EXPECT_EQ(a.matches[0], std::make_pair(0, 0));
    EXPECT_EQ(a.matches[1], std::make_pair(1, 1));
}

TEST(Greedy, TakesCheapestFirst) {
    const auto a = mif::assign_greedy(from_rows({{0.1, 0.2}, {0.15, 0.9}}));
    ASSERT_EQ(a.matches.size(), 2u);
    EXPECT_EQ(a.matches[0], std::make_pair(0, 0));
    EXPECT_EQ(a.matches[1], std::make_pair(1, 1));
    EXPECT_GT(a.total_cost, mif::assign(from_rows({{0.1, 0.2}, {0.15, 0.9}})).total_cost);
}

TEST(CostMatrix, GatedAndBlocked) {
    mif::MotionConfig motion;
    const auto near = mif::predict(mif::initiate(BoundingBox(100, 100, 140, 200), motion),
                                   mif::AffineTransform::identity(), 0.0, motion);
    const std::vector<mif::TrackCostInput> tracks = {{&near, nullptr, 0}};
    const std::vector<mif::CandidateInput> cands = {{BoundingBox(101, 101, 141, 201)},
                                                    {BoundingBox(600, 600, 640, 700)},
                                                    {BoundingBox(100, 100, 140, 200)}};
    const std::vector<std::vector<int>> blocks = {{0, 1}};  // candidate 2 outside the block
    const auto m = mif::build_cost_matrix(tracks, cands, blocks, 1, motion, {}, {});
    EXPECT_TRUE(m.costs.feasible(0, 0));
    EXPECT_FALSE(m.costs.feasible(0, 1));  // outside the gate
    EXPECT_FALSE(m.costs.feasible(0, 2));  // outside the block
    EXPECT_GE(m.costs(0, 0), 0.0);
    EXPECT_LE(m.costs(0, 0), 1.0);
}

TEST(CostMatrix, AppearanceBlendsForLostTracks) {
    mif::MotionConfig motion;
    const auto st = mif::predict(mif::initiate(BoundingBox(100, 100, 140, 200), motion),
                                 mif::AffineTransform::identity(), 0.0, motion);
    mif::Gallery g;
    g.push(mif::GalleryEntry::from(BoundingBox(100, 100, 140, 200), {1.0f, 0.0f}, 1.0, 1));
    const std::vector<float> same = {1.0f, 0.0f}, other = {-1.0f, 0.0f};
    const std::vector<mif::CandidateInput> cands = {{BoundingBox(100, 100, 140, 200), &same},
                                                    {BoundingBox(100, 100, 140, 200), &other}};
    const std::vector<std::vector<int>> blocks = {{0, 1}};
    const std::vector<mif::TrackCostInput> active = {{&st, &g, 0}}, lost = {{&st, &g, 3}};
    const auto a = mif::build_cost_matrix(active, cands, blocks, 2, motion, {}, {});
    EXPECT_DOUBLE_EQ(a.costs(0, 0), a.costs(0, 1));  // w = 1: appearance ignored
    const auto l = mif::build_cost_matrix(lost, cands, blocks, 5, motion, {}, {});
    EXPECT_LT(l.costs(0, 0), l.costs(0, 1));
}

}  // namespace
