// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "mif/appearance.hpp"
#include "mif/core_types.hpp"
#include "mif/motion.hpp"
#include "mif/parallel.hpp"

namespace mif {

/// Rows are tracks, columns detections. Infeasible entries hold +infinity.
class CostMatrix {
public:
    static constexpr double kInfeasible = std::numeric_limits<double>::infinity();

    CostMatrix() = default;
    CostMatrix(std::size_t rows, std::size_t cols, double fill = kInfeasible)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    bool feasible(std::size_t r, std::size_t c) const { return std::isfinite((*this)(r, c)); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct AssociationConfig {
    double miss_rate = 0.8;
    double gate = kChi2Gate4;  // squared Mahalanobis feasibility bound
    bool greedy = false;       // greedy matching instead of Hungarian (ablation)

    void validate() const {
        if (!(miss_rate > 0.0 && miss_rate <= 1.0) || !(gate > 0.0)) {
            throw InvalidArgument("AssociationConfig: miss_rate in (0,1] and positive gate required");
        }
    }
};

/// w * d_m + (1 - w) * d_a with w = miss_rate^time_gap: appearance takes over as a
/// track stays lost.
inline double blend_cost(double d_m, double d_a, int time_gap, double miss_rate) {
    const double w = std::pow(miss_rate, std::max(0, time_gap));
    return w * d_m + (1.0 - w) * d_a;
}

/// Squared Mahalanobis distance rescaled by the gate into [0,1].
inline double normalized_motion_distance(double d2, double gate = kChi2Gate4) {
    return std::clamp(d2 / gate, 0.0, 1.0);
}

/// What build_cost_matrix needs to know about one track.
struct TrackCostInput {
    const KalmanState* state = nullptr;  // predicted state for this frame
    const Gallery* gallery = nullptr;    // may be empty
    int lost_length = 0;
};

/// What build_cost_matrix needs to know about one candidate box.
struct CandidateInput {
    BoundingBox box;
    const std::vector<float>* feature = nullptr;  // null or empty: no appearance
    double visibility = 1.0;
};

struct CostMatrixResult {
    CostMatrix costs;
    std::vector<char> row_failed;  // numeric failure for that track; row left infeasible
};

/// Cost of one (track, candidate) pair or +inf when outside the Mahalanobis gate.
/// Without appearance on either side the blend degenerates to the motion term.
inline double pair_cost(const TrackCostInput& t, const CandidateInput& c, int now, const MotionConfig& motion,
                        const FusionConfig& fusion, const AssociationConfig& assoc) {
    const double d2 = mahalanobis(*t.state, c.box, motion);
    if (!(d2 <= assoc.gate)) {
        return CostMatrix::kInfeasible;
    }
    const double d_m = normalized_motion_distance(d2, assoc.gate);
    const bool has_appearance = t.gallery && !t.gallery->empty() && c.feature && !c.feature->empty();
    if (!has_appearance) {
        return d_m;
    }
    const GalleryEntry cand{*c.feature, c.box.area(), c.box.aspect(), c.visibility, now};
    const double d_a = appearance_distance(t.gallery->entries(), cand, now, fusion);
    return blend_cost(d_m, d_a, t.lost_length, assoc.miss_rate);
}

/// Entries are finite only inside each track's spatial-blocking candidate set and
/// inside the Mahalanobis gate. Rows are independent and may be computed on up to
/// `threads` workers.
inline CostMatrixResult build_cost_matrix(std::span<const TrackCostInput> tracks,
                                          std::span<const CandidateInput> candidates,
                                          std::span<const std::vector<int>> candidates_per_track, int now,
                                          const MotionConfig& motion, const FusionConfig& fusion,
                                          const AssociationConfig& assoc, int threads = 1) {
    if (candidates_per_track.size() != tracks.size()) {
        throw InvalidArgument("build_cost_matrix: one candidate list per track required");
    }
    CostMatrixResult out{CostMatrix(tracks.size(), candidates.size()), std::vector<char>(tracks.size(), 0)};
    parallel_for(tracks.size(), threads, [&](std::size_t r) {
        try {
            for (int c : candidates_per_track[r]) {
                out.costs(r, static_cast<std::size_t>(c)) =
                    pair_cost(tracks[r], candidates[static_cast<std::size_t>(c)], now, motion, fusion, assoc);
            }
        } catch (const SingularInnovation&) {
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                out.costs(r, c) = CostMatrix::kInfeasible;
            }
            out.row_failed[r] = 1;
        }
    });
    return out;
}

struct Assignment {
    std::vector<std::pair<int, int>> matches;  // (row, col), sorted by row
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
    double total_cost = 0.0;  // sum of matched entries in row order
};

namespace detail {

inline Assignment finish_assignment(const CostMatrix& costs, std::vector<int> col_of_row) {
    Assignment a;
    std::vector<char> col_used(costs.cols(), 0);
    for (std::size_t r = 0; r < costs.rows(); ++r) {
        const int c = col_of_row[r];
        if (c >= 0 && costs.feasible(r, static_cast<std::size_t>(c))) {
            a.matches.emplace_back(static_cast<int>(r), c);
            a.total_cost += costs(r, static_cast<std::size_t>(c));
            col_used[static_cast<std::size_t>(c)] = 1;
        } else {
            a.unmatched_rows.push_back(static_cast<int>(r));
        }
    }
    for (std::size_t c = 0; c < costs.cols(); ++c) {
        if (!col_used[c]) {
            a.unmatched_cols.push_back(static_cast<int>(c));
        }
    }
    return a;
}

/// Shortest-augmenting-path Hungarian method for n <= m (every row gets a column).
/// `a` is 0-based row-major n x m. Returns the column of each row.
inline std::vector<int> hungarian_rect(const std::vector<double>& a, int n, int m) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    return col_of_row;
}

}  // namespace detail

/// Optimal matching. Infeasible entries are replaced by a sentinel larger than any
/// sum of feasible costs, so the solver first maximizes the number of feasible pairs
/// and then minimizes their total; sentinel pairs are discarded.
inline Assignment assign(const CostMatrix& costs) {
    const std::size_t rows = costs.rows(), cols = costs.cols();
    if (rows == 0 || cols == 0) {
        return detail::finish_assignment(costs, std::vector<int>(rows, -1));
    }
    double max_finite = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (costs.feasible(r, c)) {
                max_finite = std::max(max_finite, std::abs(costs(r, c)));
            }
        }
    }
    const double sentinel = (max_finite + 1.0) * static_cast<double>(std::max(rows, cols) + 1);
    const bool transpose = rows > cols;
    const int n = static_cast<int>(transpose ? cols : rows);
    const int m = static_cast<int>(transpose ? rows : cols);
    std::vector<double> a(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const std::size_t r = transpose ? j : i, c = transpose ? i : j;
            a[static_cast<std::size_t>(i) * m + j] = costs.feasible(r, c) ? costs(r, c) : sentinel;
        }
    }
    const auto sol = detail::hungarian_rect(a, n, m);
    std::vector<int> col_of_row(rows, -1);
    for (int i = 0; i < n; ++i) {
        if (transpose) {
            col_of_row[static_cast<std::size_t>(sol[i])] = i;
        } else {
            col_of_row[static_cast<std::size_t>(i)] = sol[i];
        }
    }
    return detail::finish_assignment(costs, std::move(col_of_row));
}

/// Greedy matching in ascending (cost, row, col) order.
inline Assignment assign_greedy(const CostMatrix& costs) {
    std::vector<std::tuple<double, int, int>> order;
    for (std::size_t r = 0; r < costs.rows(); ++r) {
        for (std::size_t c = 0; c < costs.cols(); ++c) {
            if (costs.feasible(r, c)) {
                order.emplace_back(costs(r, c), static_cast<int>(r), static_cast<int>(c));
            }
        }
    }
    std::sort(order.begin(), order.end());
    std::vector<int> col_of_row(costs.rows(), -1);
    std::vector<char> col_used(costs.cols(), 0);
    for (const auto& [cost, r, c] : order) {
        if (col_of_row[static_cast<std::size_t>(r)] < 0 && !col_used[static_cast<std::size_t>(c)]) {
            col_of_row[static_cast<std::size_t>(r)] = c;
            col_used[static_cast<std::size_t>(c)] = 1;
        }
    }
    return detail::finish_assignment(costs, std::move(col_of_row));
}

}  // namespace mif
