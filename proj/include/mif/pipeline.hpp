// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mif/alignment.hpp"
#include "mif/appearance.hpp"
#include "mif/config.hpp"
#include "mif/mot_io.hpp"
#include "mif/tracker.hpp"

namespace mif {

/// Frame images (`*.pgm`) of a directory in lexicographic order.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".pgm") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct AlignmentRun {
    std::vector<AffineTransform> affines;  // one per consecutive pair
    int fallbacks = 0;                     // pairs replaced by identity
};

/// Consecutive-frame ECC over an image list. A pair without usable gradients
/// falls back to the identity warp.
inline AlignmentRun align_frames(const std::vector<std::filesystem::path>& frames, const EccParams& params,
                                 int downscale) {
    AlignmentRun run;
    if (frames.size() < 2) {
        return run;
    }
    GrayImage prev = read_pgm(frames.front().string());
    for (std::size_t k = 1; k < frames.size(); ++k) {
        GrayImage cur = read_pgm(frames[k].string());
        try {
            run.affines.push_back(estimate_affine_downscaled(prev, cur, params, downscale).transform);
        } catch (const SingularHessian&) {
            run.affines.push_back(AffineTransform::identity());
            ++run.fallbacks;
        }
        prev = std::move(cur);
    }
    return run;
}

/// What a tracking run consumes. `affines[k]` maps frame k + 1 into frame k + 2;
/// frames past the end of the list see a static camera.
struct SequenceInputs {
    DetectionSequence detections;
    std::vector<AffineTransform> affines;
    const FeatureProvider* features = nullptr;
    int last_frame = 0;  // 0: last frame holding detections
};

struct SequenceRun {
    std::vector<TrackBox> results;  // finalized, sorted by (frame, id)
    std::vector<double> frame_ms;   // per-frame step time, frames 1..last
};

/// Drives the tracker over frames 1..last. Frames without detections still advance
/// the motion model so camera warps stay aligned with frame numbers.
inline SequenceRun run_sequence(const SequenceInputs& in, const RunConfig& cfg) {
    Tracker tracker(cfg.tracker);
    const int last = in.last_frame > 0 ? in.last_frame : in.detections.last_frame();
    SequenceRun run;
    run.frame_ms.reserve(static_cast<std::size_t>(std::max(0, last)));
    for (int f = 1; f <= last; ++f) {
        FrameObservation obs;
        obs.frame = f;
        obs.image_width = cfg.sequence.image_width;
        obs.image_height = cfg.sequence.image_height;
        const auto it = in.detections.frames.find(f);
        if (it != in.detections.frames.end()) {
            obs.detections = it->second;
        }
        if (in.features && !obs.detections.empty()) {
            const auto provided = in.features->extract(f, obs.detections);
            for (std::size_t i = 0; i < obs.detections.size(); ++i) {
                obs.detections[i].feature = provided[i].feature;
                obs.detections[i].visibility = provided[i].visibility;
            }
        }
        const std::size_t k = static_cast<std::size_t>(f - 2);
        const AffineTransform camera = f >= 2 && k < in.affines.size() ? in.affines[k] : AffineTransform::identity();
        const auto t0 = std::chrono::steady_clock::now();
        tracker.step(obs, camera);
        run.frame_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    run.results = tracker.finalize();
    return run;
}

inline std::vector<MotRecord> to_records(std::span<const TrackBox> boxes) {
    std::vector<MotRecord> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) {
        out.push_back(MotRecord::from_box(b.frame, b.id, b.box, b.score));
    }
    return out;
}

/// In-memory shortcut for generated scenes: same path as reading the written files.
inline SequenceInputs inputs_from_scene(const GeneratedScene& g) {
    SequenceInputs in;
    for (std::size_t i = 0; i < g.detections.size(); ++i) {
        const auto& r = g.detections[i];
        Detection d;
        d.box = r.box();
        d.score = std::clamp(r.conf, 0.0, 1.0);
        if (!g.det_features.empty()) {
            d.feature = g.det_features[i];
            d.visibility = g.det_visibility[i];
        }
        in.detections.frames[r.frame].push_back(std::move(d));
    }
    in.affines = g.affines;
    in.last_frame = static_cast<int>(g.affines.size()) + 1;
    return in;
}

}  // namespace mif
