// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mif/core_types.hpp"
#include "mif/image.hpp"
#include "mif/text.hpp"

namespace mif {

/// One historical appearance of a track.
struct GalleryEntry {
    std::vector<float> feature;  // unit length
    double box_area = 1.0;
    double aspect = 1.0;  // height / width
    double visibility = 1.0;
    int frame = 0;

    static GalleryEntry from(const BoundingBox& box, std::vector<float> feature, double visibility, int frame) {
        return {std::move(feature), box.area(), box.aspect(), visibility, frame};
    }
};

enum class FusionMode {
    FusedVector,       // adaptive weights, one comparison against the weighted mean feature
    WeightedDistance,  // adaptive weights applied to per-entry distances
    Average,           // uniform weights, fused vector
    Latest,            // most recent entry only
};

inline std::string_view to_string(FusionMode m) {
    switch (m) {
        case FusionMode::FusedVector: return "fused_vector";
        case FusionMode::WeightedDistance: return "weighted_distance";
        case FusionMode::Average: return "average";
        case FusionMode::Latest: return "latest";
    }
    return "fused_vector";
}

inline FusionMode parse_fusion_mode(std::string_view s) {
    if (s == "fused_vector") return FusionMode::FusedVector;
    if (s == "weighted_distance") return FusionMode::WeightedDistance;
    if (s == "average") return FusionMode::Average;
    if (s == "latest") return FusionMode::Latest;
    throw InvalidArgument("unknown fusion mode '" + std::string(s) + "'");
}

struct FusionConfig {
    double lambda_scale = 0.25;
    double lambda_aspect = 0.25;
    double lambda_visibility = 0.25;
    double lambda_time = 0.25;
    int max_gallery = 26;
    FusionMode mode = FusionMode::FusedVector;

    void validate() const {
        if (lambda_scale < 0 || lambda_aspect < 0 || lambda_visibility < 0 || lambda_time < 0 ||
            !(lambda_scale + lambda_aspect + lambda_visibility + lambda_time > 0) || max_gallery < 1) {
            throw InvalidArgument("FusionConfig: non-negative lambdas with positive sum and max_gallery >= 1 required");
        }
    }
};

/// Bounded history of a track's appearances; the oldest entry is evicted first.
class Gallery {
public:
    explicit Gallery(int capacity = 26) : capacity_(std::max(1, capacity)) {}

    void push(GalleryEntry e) {
        entries_.push_back(std::move(e));
        while (static_cast<int>(entries_.size()) > capacity_) {
            entries_.pop_front();
        }
    }

    const std::deque<GalleryEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    int capacity() const noexcept { return capacity_; }

private:
    int capacity_;
    std::deque<GalleryEntry> entries_;
};

struct ComponentDistances {
    double scale = 0.0;
    double aspect = 0.0;
    double visibility = 0.0;
    double time = 0.0;
};

/// Raw per-entry differences between a candidate and each gallery entry:
/// |log area ratio|, |log aspect ratio|, |visibility gap| and age in frames.
template <typename Entries>
std::vector<ComponentDistances> component_distances(const Entries& gallery, const GalleryEntry& candidate, int now) {
    std::vector<ComponentDistances> out;
    out.reserve(std::size(gallery));
    for (const GalleryEntry& e : gallery) {
        out.push_back({std::abs(std::log(e.box_area / candidate.box_area)),
                       std::abs(std::log(e.aspect / candidate.aspect)),
                       std::abs(e.visibility - candidate.visibility), std::max(0.0, double(now - e.frame))});
    }
    return out;
}

/// Min-max normalizes each component over the gallery, combines them with the
/// lambda weights and returns softmax(-d). A component that is constant across the
/// gallery normalizes to 0 everywhere.
inline std::vector<double> fuse_weights(std::span<const ComponentDistances> raw, const FusionConfig& cfg) {
    const std::size_t n = raw.size();
    std::vector<double> d(n, 0.0);
    if (n == 0) {
        return d;
    }
    auto accumulate = [&](auto get, double lambda) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& c : raw) {
            lo = std::min(lo, get(c));
            hi = std::max(hi, get(c));
        }
        const double range = hi - lo;
        if (!(range > 0.0)) {
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            d[i] += lambda * (get(raw[i]) - lo) / range;
        }
    };
    accumulate([](const ComponentDistances& c) { return c.scale; }, cfg.lambda_scale);
    accumulate([](const ComponentDistances& c) { return c.aspect; }, cfg.lambda_aspect);
    accumulate([](const ComponentDistances& c) { return c.visibility; }, cfg.lambda_visibility);
    accumulate([](const ComponentDistances& c) { return c.time; }, cfg.lambda_time);

    const double dmin = *std::min_element(d.begin(), d.end());
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(-(d[i] - dmin));
        total += w[i];
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("feature dimensions differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * b[i];
    }
    return s;
}

inline void l2_normalize(std::vector<float>& v) {
    double n2 = 0.0;
    for (float x : v) {
        n2 += static_cast<double>(x) * x;
    }
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (float& x : v) {
            x = static_cast<float>(x * inv);
        }
    }
}

/// (1 - cos) / 2 for unit vectors, clamped to [0,1].
inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
    return std::clamp((1.0 - dot(a, b)) / 2.0, 0.0, 1.0);
}

/// Distance between the candidate and the weighted, re-normalized gallery feature.
/// When the weighted sum cancels out, falls back to the smallest per-entry distance.
template <typename Entries>
double fused_distance(const Entries& gallery, std::span<const double> weights, std::span<const float> candidate) {
    if (std::size(gallery) != weights.size() || weights.empty()) {
        throw InvalidArgument("fused_distance: one weight per gallery entry required");
    }
    std::vector<double> g(candidate.size(), 0.0);
    std::size_t i = 0;
    for (const GalleryEntry& e : gallery) {
        if (e.feature.size() != candidate.size()) {
            throw DimensionMismatch("fused_distance: feature dimensions differ");
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] += weights[i] * e.feature[k];
        }
        ++i;
    }
    double n2 = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        n2 += g[k] * g[k];
        cross += g[k] * candidate[k];
    }
    if (std::sqrt(n2) < 1e-12) {
        double best = 1.0;
        for (const GalleryEntry& e : gallery) {
            best = std::min(best, cosine_distance(e.feature, candidate));
        }
        return best;
    }
    return std::clamp((1.0 - cross / std::sqrt(n2)) / 2.0, 0.0, 1.0);
}

/// Appearance distance between a track gallery and a candidate under the configured
/// fusion mode. `candidate.feature` must be non-empty and the gallery non-empty.
template <typename Entries>
double appearance_distance(const Entries& gallery, const GalleryEntry& candidate, int now, const FusionConfig& cfg) {
    const std::size_t n = std::size(gallery);
    if (n == 0) {
        throw InvalidArgument("appearance_distance: empty gallery");
    }
    switch (cfg.mode) {
        case FusionMode::Latest: {
            const GalleryEntry& last = *std::prev(std::end(gallery));
            return cosine_distance(last.feature, candidate.feature);
        }
        case FusionMode::Average: {
            const std::vector<double> w(n, 1.0 / static_cast<double>(n));
            return fused_distance(gallery, w, candidate.feature);
        }
        case FusionMode::WeightedDistance: {
            const auto w = fuse_weights(component_distances(gallery, candidate, now), cfg);
            double d = 0.0;
            std::size_t i = 0;
            for (const GalleryEntry& e : gallery) {
                d += w[i++] * cosine_distance(e.feature, candidate.feature);
            }
            return std::clamp(d, 0.0, 1.0);
        }
        case FusionMode::FusedVector:
        default: {
            const auto w = fuse_weights(component_distances(gallery, candidate, now), cfg);
            return fused_distance(gallery, w, candidate.feature);
        }
    }
}

/// Fraction of each box not covered by higher-scored boxes (ties: earlier index
/// ranks higher), rasterized on a 4 px sampling grid.
inline std::vector<double> estimate_visibility(std::span<const Detection> dets, double cell = 4.0) {
    std::vector<double> vis(dets.size(), 1.0);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const BoundingBox& b = dets[i].box;
        std::vector<std::size_t> occluders;
        for (std::size_t j = 0; j < dets.size(); ++j) {
            const bool higher = dets[j].score > dets[i].score || (dets[j].score == dets[i].score && j < i);
            if (j != i && higher && intersection_area(b, dets[j].box) > 0.0) {
                occluders.push_back(j);
            }
        }
        if (occluders.empty()) {
            continue;
        }
        const int nx = std::max(1, static_cast<int>(std::ceil(b.width() / cell)));
        const int ny = std::max(1, static_cast<int>(std::ceil(b.height() / cell)));
        const double sx = b.width() / nx, sy = b.height() / ny;
        int covered = 0;
        for (int yi = 0; yi < ny; ++yi) {
            const double y = b.y1() + (yi + 0.5) * sy;
            for (int xi = 0; xi < nx; ++xi) {
                const double x = b.x1() + (xi + 0.5) * sx;
                for (std::size_t j : occluders) {
                    const BoundingBox& o = dets[j].box;
                    if (x >= o.x1() && x < o.x2() && y >= o.y1() && y < o.y2()) {
                        ++covered;
                        break;
                    }
                }
            }
        }
        vis[i] = std::clamp(1.0 - static_cast<double>(covered) / (nx * ny), 0.0, 1.0);
    }
    return vis;
}

/// Joint RGB histogram (bins^3 entries), L1- then L2-normalized.
inline std::vector<float> color_histogram_feature(const RgbImage& patch, int bins = 8) {
    if (patch.width <= 0 || patch.height <= 0 || patch.data.empty()) {
        throw EmptyPatch("color_histogram_feature: empty patch");
    }
    if (bins < 1 || bins > 256) {
        throw InvalidArgument("color_histogram_feature: bins must be in [1, 256]");
    }
    std::vector<double> hist(static_cast<std::size_t>(bins) * bins * bins, 0.0);
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            const auto* p = patch.pixel(x, y);
            const int r = p[0] * bins / 256, g = p[1] * bins / 256, b = p[2] * bins / 256;
            hist[(static_cast<std::size_t>(r) * bins + g) * bins + b] += 1.0;
        }
    }
    const double total = static_cast<double>(patch.width) * patch.height;
    std::vector<float> f(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) {
        f[i] = static_cast<float>(hist[i] / total);
    }
    l2_normalize(f);
    return f;
}

/// Copies the pixels of `roi` (clipped to the image) into a new patch.
inline RgbImage crop(const RgbImage& img, const BoundingBox& roi) {
    const int x0 = std::max(0, static_cast<int>(std::floor(roi.x1())));
    const int y0 = std::max(0, static_cast<int>(std::floor(roi.y1())));
    const int x1 = std::min(img.width, static_cast<int>(std::ceil(roi.x2())));
    const int y1 = std::min(img.height, static_cast<int>(std::ceil(roi.y2())));
    RgbImage out;
    if (x1 <= x0 || y1 <= y0) {
        return out;
    }
    out.width = x1 - x0;
    out.height = y1 - y0;
    out.data.reserve(3 * static_cast<std::size_t>(out.width) * out.height);
    for (int y = y0; y < y1; ++y) {
        const auto* row = img.pixel(x0, y);
        out.data.insert(out.data.end(), row, row + 3 * out.width);
    }
    return out;
}

struct ProvidedFeature {
    std::vector<float> feature;  // unit length
    double visibility = 1.0;
};

/// Source of per-detection appearance features and visibility estimates.
/// Implementations must tolerate concurrent extract() calls on distinct frames.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    /// One result per detection, in input order.
    virtual std::vector<ProvidedFeature> extract(int frame_id, std::span<const Detection> dets) const = 0;
};

/// Features injected from a text file:
///
///     dim D
///     frame_id det_index visibility f_0 ... f_{D-1}
///
/// det_index is the 0-based position of the detection within its frame, in
/// detection-file order. Vectors are L2-normalized on load.
class PrecomputedFileProvider : public FeatureProvider {
public:
    explicit PrecomputedFileProvider(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open feature file: " + path);
        }
        std::string line;
        std::size_t lineno = 0;
        bool have_dim = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::is_blank(line)) {
                continue;
            }
            const auto f = text::split(line, " \t\r", true);
            if (!have_dim) {
                double d = 0;
                if (f.size() != 2 || f[0] != "dim" || !text::parse_double(f[1], d) || d < 1 || d != std::floor(d)) {
                    throw ParseError(path, lineno, "expected header 'dim D'");
                }
                dim_ = static_cast<int>(d);
                have_dim = true;
                continue;
            }
            if (f.size() != static_cast<std::size_t>(dim_) + 3) {
                throw ParseError(path, lineno,
                                 "expected " + std::to_string(dim_ + 3) + " fields, got " + std::to_string(f.size()));
            }
            double frame = 0, index = 0, vis = 0;
            if (!text::parse_double(f[0], frame) || !text::parse_double(f[1], index) ||
                !text::parse_double(f[2], vis) || index < 0) {
                throw ParseError(path, lineno, "invalid frame/index/visibility");
            }
            ProvidedFeature pf;
            pf.visibility = std::clamp(vis, 0.0, 1.0);
            pf.feature.resize(dim_);
            for (int k = 0; k < dim_; ++k) {
                double v = 0;
                if (!text::parse_double(f[3 + k], v)) {
                    throw ParseError(path, lineno, "invalid feature value");
                }
                pf.feature[k] = static_cast<float>(v);
            }
            l2_normalize(pf.feature);
            auto& slot = table_[static_cast<int>(frame)];
            const auto idx = static_cast<std::size_t>(index);
            if (slot.size() <= idx) {
                slot.resize(idx + 1);
            }
            slot[idx] = std::move(pf);
        }
        if (!have_dim) {
            throw ParseError(path, 0, "missing 'dim D' header");
        }
    }

    int dim() const noexcept { return dim_; }

    std::vector<ProvidedFeature> extract(int frame_id, std::span<const Detection> dets) const override {
        std::vector<ProvidedFeature> out(dets.size());
        const auto it = table_.find(frame_id);
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (it == table_.end() || i >= it->second.size() || it->second[i].feature.empty()) {
                throw InvalidArgument("feature file has no entry for frame " + std::to_string(frame_id) +
                                      " detection " + std::to_string(i));
            }
            out[i] = it->second[i];
        }
        return out;
    }

private:
    int dim_ = 0;
    std::map<int, std::vector<ProvidedFeature>> table_;
};

/// Built-in fallback: color histograms of frame crops. Frames are read from
/// `<dir>/<frame as %06d>.ppm` (or `.pgm`). Visibility comes from estimate_visibility.
class ColorHistogramProvider : public FeatureProvider {
public:
    explicit ColorHistogramProvider(std::filesystem::path image_dir, int bins = 8)
        : dir_(std::move(image_dir)), bins_(bins) {}

    std::vector<ProvidedFeature> extract(int frame_id, std::span<const Detection> dets) const override {
        char name[32];
        std::snprintf(name, sizeof(name), "%06d", frame_id);
        std::filesystem::path p = dir_ / (std::string(name) + ".ppm");
        if (!std::filesystem::exists(p)) {
            p = dir_ / (std::string(name) + ".pgm");
        }
        const RgbImage img = read_pnm_rgb(p.string());
        const auto vis = estimate_visibility(dets);
        std::vector<ProvidedFeature> out(dets.size());
        for (std::size_t i = 0; i < dets.size(); ++i) {
            const RgbImage patch = crop(img, dets[i].box);
            if (patch.data.empty()) {
                // box entirely outside the frame: uniform histogram
                out[i].feature.assign(static_cast<std::size_t>(bins_) * bins_ * bins_, 1.0f);
                l2_normalize(out[i].feature);
            } else {
                out[i].feature = color_histogram_feature(patch, bins_);
            }
            out[i].visibility = vis[i];
        }
        return out;
    }

private:
    std::filesystem::path dir_;
    int bins_;
};

}  // namespace mif
