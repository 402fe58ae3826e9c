// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mif/appearance.hpp"
#include "mif/core_types.hpp"
#include "mif/image.hpp"
#include "mif/mot_io.hpp"
#include "mif/texture.hpp"

namespace mif {

/// A target with explicit motion. Frames are 0-based; the box is given in image
/// coordinates at the spawn frame and the velocity in frame-0 (world) pixels/frame.
struct SyntheticTarget {
    int spawn_frame = 0;
    int death_frame = -1;  // last frame (inclusive); -1 means the end of the scene
    double cx = 0.0, cy = 0.0, w = 40.0, h = 100.0;
    double vx = 0.0, vy = 0.0;
};

struct SyntheticScene {
    int n_targets = 20;  // explicit targets are topped up with random ones
    int n_frames = 200;
    int image_width = 1280;
    int image_height = 720;
    std::vector<SyntheticTarget> targets;

    // random target ranges
    double min_height = 60.0, max_height = 120.0;
    double min_aspect = 0.35, max_aspect = 0.5;  // width / height
    double max_speed = 2.0;
    double min_lifetime_fraction = 0.3;

    // camera: explicit per-transition schedule, else constant pan/zoom per frame
    std::vector<AffineTransform> camera;
    double pan_x = 0.0, pan_y = 0.0;
    double zoom = 1.0;  // per-frame scale about the image center
    double camera_shake = 0.0;  // std (px) of zero-mean per-frame translation jitter added to the schedule
    double affine_noise = 0.0;  // std (px) of the translation error in the reported transforms

    // detection model
    double detection_noise = 0.0;   // Gaussian jitter: center std noise * size, log-size std noise / 4
    double miss_probability = 0.0;
    double false_positive_rate = 0.0;  // per-frame probability of one false positive
    double occlusion_miss_visibility = 0.0;  // targets less visible than this are never detected
    double min_visible_fraction = 0.5;       // portion inside the image for a target to be in view

    // appearance model: per-identity Gaussian clusters, contaminated by occluders
    int feature_dim = 0;
    double feature_noise = 0.05;  // cluster spread: expected norm of the noise added to a unit center

    bool render = false;

    void validate() const {
        auto rate = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (n_targets < 0 || n_frames < 1 || image_width < 8 || image_height < 8 || !rate(miss_probability) ||
            !rate(false_positive_rate) || !rate(occlusion_miss_visibility) || !rate(min_visible_fraction) ||
            detection_noise < 0.0 || camera_shake < 0.0 || affine_noise < 0.0 || feature_dim < 0 || feature_noise < 0.0 || !(zoom > 0.0) ||
            !(min_height > 0.0 && max_height >= min_height) || !(min_aspect > 0.0 && max_aspect >= min_aspect)) {
            throw InvalidArgument("SyntheticScene: parameter out of range");
        }
        if (!camera.empty() && static_cast<int>(camera.size()) != n_frames - 1) {
            throw InvalidArgument("SyntheticScene: camera schedule must have n_frames - 1 entries");
        }
    }

    AffineTransform transition(int k) const {
        if (!camera.empty()) {
            return camera[static_cast<std::size_t>(k)];
        }
        return compose(AffineTransform::translation(pan_x, pan_y),
                       AffineTransform::scaling_about(zoom, 0.5 * image_width, 0.5 * image_height));
    }
};

struct GeneratedScene {
    std::vector<MotRecord> ground_truth;  // sorted by (frame, id); field `b` holds visibility
    std::vector<MotRecord> detections;    // grouped by frame, id = -1
    std::vector<std::vector<float>> det_features;  // aligned with detections (empty when feature_dim == 0)
    std::vector<double> det_visibility;            // aligned with detections
    std::vector<AffineTransform> affines;          // n_frames - 1 reported transitions (with affine_noise)
    std::vector<GrayImage> frames;                 // when rendered
    int image_width = 0;
    int image_height = 0;
    bool camera_motion = false;
    double detection_noise = 0.0;  // relative center std of the detections
};

namespace detail {

inline double covered_fraction(const BoundingBox& b, const std::vector<BoundingBox>& occluders, double cell = 4.0) {
    if (occluders.empty()) {
        return 0.0;
    }
    const int nx = std::max(1, static_cast<int>(std::ceil(b.width() / cell)));
    const int ny = std::max(1, static_cast<int>(std::ceil(b.height() / cell)));
    int covered = 0;
    for (int yi = 0; yi < ny; ++yi) {
        const double y = b.y1() + (yi + 0.5) * b.height() / ny;
        for (int xi = 0; xi < nx; ++xi) {
            const double x = b.x1() + (xi + 0.5) * b.width() / nx;
            for (const auto& o : occluders) {
                if (x >= o.x1() && x < o.x2() && y >= o.y1() && y < o.y2()) {
                    ++covered;
                    break;
                }
            }
        }
    }
    return static_cast<double>(covered) / (nx * ny);
}

inline std::vector<float> random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = static_cast<float>(n01(rng));
    l2_normalize(v);
    return v;
}

}  // namespace detail

/// Deterministic for a fixed (scene, seed). Ground truth follows the target motion
/// composed with the cumulative camera warp exactly; detections are jittered
/// ground truth with misses and uniform false positives.
inline GeneratedScene generate_scene(const SyntheticScene& scene, std::uint64_t seed) {
    scene.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double W = scene.image_width, H = scene.image_height;
    const int F = scene.n_frames;

    GeneratedScene out;
    out.image_width = scene.image_width;
    out.image_height = scene.image_height;
    out.detection_noise = scene.detection_noise;

    // cumulative warps: frame-0 coordinates -> frame-k coordinates. Camera noise has
    // its own stream so that it leaves targets and detections unchanged.
    std::mt19937_64 camera_rng(seed ^ 0x5851f42d4c957f2dULL);
    std::vector<AffineTransform> cumulative(static_cast<std::size_t>(F));
    for (int k = 0; k + 1 < F; ++k) {
        const double sx = n01(camera_rng) * scene.camera_shake, sy = n01(camera_rng) * scene.camera_shake;
        const double ex = n01(camera_rng) * scene.affine_noise, ey = n01(camera_rng) * scene.affine_noise;
        const AffineTransform truth = compose(AffineTransform::translation(sx, sy), scene.transition(k));
        out.affines.push_back(compose(AffineTransform::translation(ex, ey), truth));
        cumulative[static_cast<std::size_t>(k + 1)] = compose(truth, cumulative[static_cast<std::size_t>(k)]);
        if (!(truth == AffineTransform::identity())) {
            out.camera_motion = true;
        }
    }

    std::vector<SyntheticTarget> targets = scene.targets;
    while (static_cast<int>(targets.size()) < scene.n_targets) {
        SyntheticTarget t;
        const int min_life = std::max(1, static_cast<int>(scene.min_lifetime_fraction * F));
        const int latest_spawn = std::max(0, F - min_life);
        t.spawn_frame = std::min(latest_spawn, static_cast<int>(u01(rng) * (latest_spawn + 1)));
        const int life = min_life + static_cast<int>(u01(rng) * (F - min_life));
        t.death_frame = std::min(F - 1, t.spawn_frame + life);
        t.h = scene.min_height + u01(rng) * (scene.max_height - scene.min_height);
        t.w = t.h * (scene.min_aspect + u01(rng) * (scene.max_aspect - scene.min_aspect));
        t.cx = 0.5 * t.w + u01(rng) * std::max(0.0, W - t.w);
        t.cy = 0.5 * t.h + u01(rng) * std::max(0.0, H - t.h);
        t.vx = (2.0 * u01(rng) - 1.0) * scene.max_speed;
        t.vy = (2.0 * u01(rng) - 1.0) * scene.max_speed * 0.25;
        targets.push_back(t);
    }
    std::vector<std::vector<float>> centers;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        centers.push_back(scene.feature_dim > 0 ? detail::random_unit(rng, scene.feature_dim) : std::vector<float>{});
    }
    // spawn boxes moved into world coordinates
    std::vector<BoundingBox> world0;
    for (const auto& t : targets) {
        const auto spawn_box = BoundingBox::from_center_size(t.cx, t.cy, t.w, t.h);
        world0.push_back(warp_box(spawn_box, cumulative[static_cast<std::size_t>(std::clamp(t.spawn_frame, 0, F - 1))].inverse()));
    }

    const Texture background(seed ^ 0x9e3779b97f4a7c15ULL, 12, 16.0, 96.0);
    for (int k = 0; k < F; ++k) {
        struct Visible {
            std::size_t target;
            BoundingBox box;
            double visibility;
            int occluder;
        };
        std::vector<Visible> visible;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto& t = targets[i];
            const int death = t.death_frame < 0 ? F - 1 : t.death_frame;
            if (k < t.spawn_frame || k > death) continue;
            const double dt = k - t.spawn_frame;
            const BoundingBox& w0 = world0[i];
            const BoundingBox world(w0.x1() + dt * t.vx, w0.y1() + dt * t.vy, w0.x2() + dt * t.vx, w0.y2() + dt * t.vy);
            const BoundingBox img = warp_box(world, cumulative[static_cast<std::size_t>(k)]);
            const auto clipped = clip_box(img, W, H);
            if (!clipped || clipped->area() < scene.min_visible_fraction * img.area()) continue;
            visible.push_back({i, img, 1.0, -1});
        }
        // nearer targets (larger bottom edge) occlude farther ones
        for (auto& v : visible) {
            std::vector<BoundingBox> nearer;
            double best_overlap = 0.0;
            for (const auto& o : visible) {
                const bool in_front = o.box.y2() > v.box.y2() || (o.box.y2() == v.box.y2() && o.target < v.target);
                if (o.target == v.target || !in_front) continue;
                const double inter = intersection_area(v.box, o.box);
                if (inter <= 0.0) continue;
                nearer.push_back(o.box);
                if (inter > best_overlap) {
                    best_overlap = inter;
                    v.occluder = static_cast<int>(o.target);
                }
            }
            v.visibility = 1.0 - detail::covered_fraction(v.box, nearer);
        }
        for (const auto& v : visible) {
            MotRecord r = MotRecord::from_box(k + 1, static_cast<int>(v.target) + 1, v.box, 1.0);
            r.a = 1.0;
            r.b = v.visibility;
            out.ground_truth.push_back(r);
        }
        for (const auto& v : visible) {
            // draws happen unconditionally so the random stream does not depend on outcomes
            const double miss = u01(rng);
            const double jx = n01(rng), jy = n01(rng), jw = n01(rng), jh = n01(rng), js = n01(rng);
            std::vector<double> noise(static_cast<std::size_t>(scene.feature_dim));
            for (auto& x : noise) x = n01(rng) * scene.feature_noise / std::sqrt(static_cast<double>(scene.feature_dim));
            if (v.visibility < scene.occlusion_miss_visibility || miss < scene.miss_probability) continue;
            const double s = scene.detection_noise;
            const BoundingBox det =
                s > 0.0 ? BoundingBox::from_center_size(v.box.cx() + jx * s * v.box.width(), v.box.cy() + jy * s * v.box.height(),
                                                        v.box.width() * std::exp(jw * s * 0.25), v.box.height() * std::exp(jh * s * 0.25))
                        : v.box;
            const double score = std::clamp(0.95 - 0.4 * (1.0 - v.visibility) + 0.03 * js, 0.3, 1.0);
            out.detections.push_back(MotRecord::from_box(k + 1, -1, det, score));
            out.det_visibility.push_back(v.visibility);
            if (scene.feature_dim > 0) {
                const auto& own = centers[v.target];
                std::vector<float> f(own.size());
                for (std::size_t d = 0; d < f.size(); ++d) {
                    double x = v.visibility * own[d] + noise[d];
                    if (v.occluder >= 0) x += (1.0 - v.visibility) * centers[static_cast<std::size_t>(v.occluder)][d];
                    else x += (1.0 - v.visibility) * own[d];
                    f[d] = static_cast<float>(x);
                }
                l2_normalize(f);
                out.det_features.push_back(std::move(f));
            }
        }
        const double fp_draw = u01(rng);
        const double fh = scene.min_height + u01(rng) * (scene.max_height - scene.min_height);
        const double fw = fh * scene.min_aspect;
        const double fx = u01(rng) * std::max(1.0, W - fw), fy = u01(rng) * std::max(1.0, H - fh);
        const double fs = 0.3 + 0.3 * u01(rng);
        std::vector<float> ff;
        if (scene.feature_dim > 0) ff = detail::random_unit(rng, scene.feature_dim);
        if (fp_draw < scene.false_positive_rate) {
            out.detections.push_back(MotRecord::from_box(k + 1, -1, BoundingBox(fx, fy, fx + fw, fy + fh), fs));
            out.det_visibility.push_back(1.0);
            if (scene.feature_dim > 0) out.det_features.push_back(std::move(ff));
        }

        if (scene.render) {
            const AffineTransform to_world = cumulative[static_cast<std::size_t>(k)].inverse();
            GrayImage img = background.render(scene.image_width, scene.image_height, to_world);
            std::vector<Visible> order = visible;
            std::sort(order.begin(), order.end(), [](const Visible& a, const Visible& b) {
                return a.box.y2() != b.box.y2() ? a.box.y2() < b.box.y2() : a.target > b.target;
            });
            for (const auto& v : order) {
                const Texture skin(seed + 1000 + v.target, 6, 6.0, 24.0);
                const int x0 = std::max(0, static_cast<int>(std::floor(v.box.x1())));
                const int x1 = std::min(scene.image_width, static_cast<int>(std::ceil(v.box.x2())));
                const int y0 = std::max(0, static_cast<int>(std::floor(v.box.y1())));
                const int y1 = std::min(scene.image_height, static_cast<int>(std::ceil(v.box.y2())));
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) {
                        img.at(x, y) = static_cast<float>(0.15 + 0.7 * skin(x - v.box.x1(), y - v.box.y1()));
                    }
                }
            }
            out.frames.push_back(std::move(img));
        }
    }
    std::stable_sort(out.ground_truth.begin(), out.ground_truth.end(), [](const MotRecord& a, const MotRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    return out;
}

}  // namespace mif
