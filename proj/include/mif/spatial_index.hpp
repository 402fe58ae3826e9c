// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mif/core_types.hpp"

namespace mif {

/// Inclusive cell index range.
struct CellRange {
    int m0 = 0, m1 = -1;  // columns (x)
    int n0 = 0, n1 = -1;  // rows (y)

    bool empty() const noexcept { return m1 < m0 || n1 < n0; }
    bool intersects(const CellRange& o) const noexcept {
        return !empty() && !o.empty() && m0 <= o.m1 && o.m0 <= m1 && n0 <= o.n1 && o.n0 <= n1;
    }
};

/// Partition of a W x H image into M x N half-open cell rectangles.
class GridGeometry {
public:
    GridGeometry() = default;
    GridGeometry(double image_w, double image_h, int m_cells = 16, int n_cells = 8)
        : image_w_(image_w), image_h_(image_h), m_(m_cells), n_(n_cells) {
        if (!(image_w > 0.0) || !(image_h > 0.0) || m_cells < 1 || n_cells < 1) {
            throw InvalidArgument("GridGeometry: positive image size and at least one cell per axis required");
        }
    }

    double image_w() const noexcept { return image_w_; }
    double image_h() const noexcept { return image_h_; }
    int m_cells() const noexcept { return m_; }
    int n_cells() const noexcept { return n_; }
    double cell_w() const noexcept { return image_w_ / m_; }
    double cell_h() const noexcept { return image_h_ / n_; }

    /// Cells touched with positive area by the box after clipping to the image.
    /// A box edge lying exactly on a cell boundary does not claim the next cell.
    CellRange cell_range(const BoundingBox& box) const {
        const auto clipped = clip_box(box, image_w_, image_h_);
        if (!clipped) {
            return {};
        }
        CellRange r;
        r.m0 = std::clamp(static_cast<int>(std::floor(clipped->x1() / cell_w())), 0, m_ - 1);
        r.m1 = std::clamp(static_cast<int>(std::ceil(clipped->x2() / cell_w())) - 1, 0, m_ - 1);
        r.n0 = std::clamp(static_cast<int>(std::floor(clipped->y1() / cell_h())), 0, n_ - 1);
        r.n1 = std::clamp(static_cast<int>(std::ceil(clipped->y2() / cell_h())) - 1, 0, n_ - 1);
        return r;
    }

private:
    double image_w_ = 1.0;
    double image_h_ = 1.0;
    int m_ = 1;
    int n_ = 1;
};

/// Per-cell occupancy bit vectors: bit d of cell (m, n) is set iff detection d
/// overlaps that cell.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(const GridGeometry& g, int num_dets)
        : geom_(g),
          num_dets_(num_dets),
          words_((num_dets + 63) / 64),
          bits_(static_cast<std::size_t>(g.m_cells()) * g.n_cells() * words_, 0) {}

    const GridGeometry& geometry() const noexcept { return geom_; }
    int num_detections() const noexcept { return num_dets_; }

    bool test(int m, int n, int d) const noexcept {
        return (bits_[word_index(m, n, d)] >> (d & 63)) & 1u;
    }
    void set(int m, int n, int d) noexcept { bits_[word_index(m, n, d)] |= std::uint64_t{1} << (d & 63); }

    std::span<const std::uint64_t> cell_words(int m, int n) const noexcept {
        return {bits_.data() + cell_offset(m, n), static_cast<std::size_t>(words_)};
    }

private:
    std::size_t cell_offset(int m, int n) const noexcept {
        return (static_cast<std::size_t>(m) * geom_.n_cells() + n) * words_;
    }
    std::size_t word_index(int m, int n, int d) const noexcept { return cell_offset(m, n) + (d >> 6); }

    GridGeometry geom_;
    int num_dets_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> bits_;
};

inline FeatureMap build_feature_map(std::span<const BoundingBox> dets, const GridGeometry& g) {
    FeatureMap map(g, static_cast<int>(dets.size()));
    for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
        const CellRange r = g.cell_range(dets[d]);
        for (int m = r.m0; m <= r.m1; ++m) {
            for (int n = r.n0; n <= r.n1; ++n) {
                map.set(m, n, d);
            }
        }
    }
    return map;
}

inline FeatureMap build_feature_map(std::span<const BoundingBox> dets, double image_w, double image_h,
                                    int m_cells = 16, int n_cells = 8) {
    return build_feature_map(dets, GridGeometry(image_w, image_h, m_cells, n_cells));
}

/// Summed-area table over a FeatureMap, one count channel per detection, with a
/// zero first row and column. Counts are unsigned; region sums are evaluated in
/// modular arithmetic, which is exact as long as a region count fits `Count`.
template <typename Count = std::uint16_t>
class BasicIntegralIndex {
    static_assert(std::is_unsigned_v<Count>);

public:
    BasicIntegralIndex() = default;
    BasicIntegralIndex(const GridGeometry& g, int num_dets)
        : geom_(g),
          num_dets_(num_dets),
          sums_(static_cast<std::size_t>(g.m_cells() + 1) * (g.n_cells() + 1) * num_dets, 0) {
        if (static_cast<long long>(g.m_cells()) * g.n_cells() > std::numeric_limits<Count>::max()) {
            throw InvalidArgument("IntegralIndex: count type too narrow for this grid");
        }
    }

    const GridGeometry& geometry() const noexcept { return geom_; }
    int num_detections() const noexcept { return num_dets_; }

    /// Padded accessor: sums(m, n) covers cells m' < m, n' < n, i.e. sums(m+1, n+1)
    /// is the inclusive prefix up to cell (m, n).
    std::span<const Count> sums(int m, int n) const noexcept {
        return {sums_.data() + offset(m, n), static_cast<std::size_t>(num_dets_)};
    }
    std::span<Count> sums(int m, int n) noexcept {
        return {sums_.data() + offset(m, n), static_cast<std::size_t>(num_dets_)};
    }

    /// Writes 1 into `out[d]` when detection d occupies any cell of `r`, else 0.
    void region_mask(const CellRange& r, std::span<std::uint8_t> out) const noexcept {
        const Count* __restrict a = sums_.data() + offset(r.m1 + 1, r.n1 + 1);
        const Count* __restrict b = sums_.data() + offset(r.m0, r.n0);
        const Count* __restrict c = sums_.data() + offset(r.m0, r.n1 + 1);
        const Count* __restrict e = sums_.data() + offset(r.m1 + 1, r.n0);
        std::uint8_t* __restrict o = out.data();
        const int count = num_dets_;  // a local bound lets the loop vectorize
        for (int d = 0; d < count; ++d) {
            const Count v = static_cast<Count>(a[d] + b[d] - c[d] - e[d]);
            o[d] = v != 0;
        }
    }

private:
    std::size_t offset(int m, int n) const noexcept {
        return (static_cast<std::size_t>(m) * (geom_.n_cells() + 1) + n) * num_dets_;
    }

    GridGeometry geom_;
    int num_dets_ = 0;
    std::vector<Count> sums_;
};

using IntegralIndex = BasicIntegralIndex<std::uint16_t>;

/// Dynamic-programming construction:
/// I(m,n) = I(m,n-1) + I(m-1,n) - I(m-1,n-1) + f(m,n).
template <typename Count = std::uint16_t>
BasicIntegralIndex<Count> build_integral(const FeatureMap& map) {
    const GridGeometry& g = map.geometry();
    const int dcount = map.num_detections();
    BasicIntegralIndex<Count> index(g, dcount);
    std::vector<Count> cell(dcount);
    for (int m = 1; m <= g.m_cells(); ++m) {
        for (int n = 1; n <= g.n_cells(); ++n) {
            const auto words = map.cell_words(m - 1, n - 1);
            for (int d = 0; d < dcount; ++d) {
                cell[d] = static_cast<Count>((words[d >> 6] >> (d & 63)) & 1u);
            }
            auto out = index.sums(m, n);
            const auto left = index.sums(m, n - 1);
            const auto up = index.sums(m - 1, n);
            const auto diag = index.sums(m - 1, n - 1);
            for (int d = 0; d < dcount; ++d) {
                out[d] = static_cast<Count>(left[d] + up[d] - diag[d] + cell[d]);
            }
        }
    }
    return index;
}

/// Ids of every detection occupying at least one cell of the region's cell range
/// (four table lookups per detection, independent of the region size).
template <typename Count>
std::vector<int> query_region(const BasicIntegralIndex<Count>& index, const BoundingBox& region,
                              std::vector<std::uint8_t>& scratch) {
    std::vector<int> ids;
    const CellRange r = index.geometry().cell_range(region);
    if (r.empty() || index.num_detections() == 0) {
        return ids;
    }
    const int n = index.num_detections();
    scratch.assign(static_cast<std::size_t>((n + 7) / 8 * 8), 0);
    index.region_mask(r, std::span<std::uint8_t>(scratch.data(), static_cast<std::size_t>(n)));
    std::size_t hits = 0;  // count first: one allocation for the ids
    for (int base = 0; base < n; base += 8) {
        std::uint64_t word;
        std::memcpy(&word, scratch.data() + base, sizeof word);
        hits += static_cast<std::size_t>(std::popcount(word));
    }
    ids.reserve(hits);
    for (int base = 0; base < n; base += 8) {
        std::uint64_t word;
        std::memcpy(&word, scratch.data() + base, sizeof word);
        while (word != 0) {  // mask bytes are 0/1, so each set byte holds one bit
            ids.push_back(base + std::countr_zero(word) / 8);
            word &= word - 1;
        }
    }
    return ids;
}

template <typename Count>
std::vector<int> query_region(const BasicIntegralIndex<Count>& index, const BoundingBox& region) {
    std::vector<std::uint8_t> scratch;
    return query_region(index, region, scratch);
}

/// Baseline: detections with positive intersection against each track box expanded
/// by `expand` about its center. O(tracks x dets).
inline std::vector<std::vector<int>> iou_blocking(std::span<const BoundingBox> tracks,
                                                  std::span<const BoundingBox> dets, double expand) {
    if (!(expand >= 1.0)) {
        throw InvalidArgument("iou_blocking: expand must be >= 1");
    }
    std::vector<std::vector<int>> out(tracks.size());
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        const BoundingBox region = tracks[t].expanded(expand);
        for (std::size_t d = 0; d < dets.size(); ++d) {
            if (intersection_area(region, dets[d]) > 0.0) {
                out[t].push_back(static_cast<int>(d));
            }
        }
    }
    return out;
}

/// Integral-image counterpart of iou_blocking: one index build plus one region
/// query per track.
inline std::vector<std::vector<int>> integral_blocking(std::span<const BoundingBox> tracks,
                                                       std::span<const BoundingBox> dets, double expand,
                                                       const GridGeometry& g) {
    if (!(expand >= 1.0)) {
        throw InvalidArgument("integral_blocking: expand must be >= 1");
    }
    const auto index = build_integral(build_feature_map(dets, g));
    std::vector<std::vector<int>> out(tracks.size());
    std::vector<std::uint8_t> scratch;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        out[t] = query_region(index, tracks[t].expanded(expand), scratch);
    }
    return out;
}

}  // namespace mif
