// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mif/appearance.hpp"
#include "mif/association.hpp"
#include "mif/core_types.hpp"
#include "mif/motion.hpp"
#include "mif/parallel.hpp"
#include "mif/spatial_index.hpp"

namespace mif {

enum class BlockingMethod { Integral, Iou, None };

inline std::string_view to_string(BlockingMethod b) {
    switch (b) {
        case BlockingMethod::Integral: return "integral";
        case BlockingMethod::Iou: return "iou";
        case BlockingMethod::None: return "none";
    }
    return "integral";
}

inline BlockingMethod parse_blocking_method(std::string_view s) {
    if (s == "integral") return BlockingMethod::Integral;
    if (s == "iou") return BlockingMethod::Iou;
    if (s == "none") return BlockingMethod::None;
    throw InvalidArgument("unknown blocking method '" + std::string(s) + "'");
}

struct TrackerConfig {
    double nms_threshold = 0.6;
    double detection_min_score = 0.3;  // births only
    bool camera_motion = true;         // selects the reconnection window below
    int time_gap_with_camera_motion = 10;
    int time_gap_static = 1;
    int min_track_length = 5;
    double blocking_expand = 1.5;
    int grid_m = 16;
    int grid_n = 8;
    BlockingMethod blocking = BlockingMethod::Integral;
    double score_decay = 0.95;  // per lost frame, for NMS ranking of predicted boxes
    int threads = 1;
    MotionConfig motion;
    FusionConfig fusion;
    AssociationConfig association;

    int max_time_gap() const noexcept { return camera_motion ? time_gap_with_camera_motion : time_gap_static; }

    void validate() const {
        if (!(nms_threshold > 0.0 && nms_threshold < 1.0) || detection_min_score < 0.0 || detection_min_score > 1.0 ||
            time_gap_with_camera_motion < 0 || time_gap_static < 0 || min_track_length < 1 ||
            !(blocking_expand >= 1.0) || grid_m < 1 || grid_n < 1 || !(score_decay > 0.0 && score_decay <= 1.0) ||
            threads < 1) {
            throw InvalidArgument("TrackerConfig: value out of range");
        }
        motion.validate();
        fusion.validate();
        association.validate();
    }
};

/// One frame of input. Detection features/visibility are filled by a
/// FeatureProvider before the frame reaches the tracker.
struct FrameObservation {
    int frame = 1;
    double image_width = 0.0;  // 0: derive the blocking grid extent from the boxes
    double image_height = 0.0;
    std::vector<Detection> detections;
};

enum class TrackStatus { Active, Lost, Removed };

struct TrackHistoryEntry {
    int frame = 0;
    BoundingBox box;
    double score = 0.0;
};

struct Track {
    int id = 0;
    KalmanState kalman;
    Gallery gallery;
    int lost_length = 0;
    TrackStatus status = TrackStatus::Active;
    double score = 0.0;  // last matched detection score
    std::optional<BoundingBox> predicted;  // prior box for the most recent frame
    std::vector<TrackHistoryEntry> history;
};

/// An output box: a track position at one frame.
struct TrackBox {
    int frame = 0;
    int id = 0;
    BoundingBox box;
    double score = 0.0;
};

/// Greedy NMS that also reports, for every input, the kept box that suppressed it
/// (-1 when kept). Boxes are visited by descending score, ties by lower index.
struct NmsResult {
    std::vector<int> kept;           // in visiting order
    std::vector<int> suppressed_by;  // per input
};

inline NmsResult nms_detailed(std::span<const BoundingBox> boxes, std::span<const double> scores, double thresh) {
    if (boxes.size() != scores.size()) {
        throw InvalidArgument("nms: one score per box required");
    }
    if (!(thresh > 0.0 && thresh < 1.0)) {
        throw InvalidArgument("nms: threshold must lie in (0,1)");
    }
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    NmsResult r;
    r.suppressed_by.assign(boxes.size(), -1);
    for (int i : order) {
        for (int k : r.kept) {
            if (iou(boxes[i], boxes[k]) >= thresh) {
                r.suppressed_by[i] = k;
                break;
            }
        }
        if (r.suppressed_by[i] < 0) {
            r.kept.push_back(i);
        }
    }
    return r;
}

inline std::vector<int> nms(std::span<const BoundingBox> boxes, std::span<const double> scores, double thresh) {
    return nms_detailed(boxes, scores, thresh).kept;
}

/// Value-type snapshot of everything the tracker carries between frames.
struct TrackerState {
    std::vector<Track> tracks;  // every track ever created, ascending id
    int next_id = 1;
    std::optional<int> last_frame;
};

/// Frame-loop tracker. Not thread-safe; one owner drives step() sequentially.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg, TrackerState state = {}) : cfg_(std::move(cfg)), state_(std::move(state)) {
        cfg_.validate();
    }

    const TrackerConfig& config() const noexcept { return cfg_; }
    const TrackerState& state() const noexcept { return state_; }

    /// Processes one frame; `camera` maps the previous frame into this one.
    /// Returns the Active track boxes of this frame sorted by id.
    std::vector<TrackBox> step(const FrameObservation& obs, const AffineTransform& camera = AffineTransform::identity());

    /// Trajectories with at least min_track_length boxes, sorted by (frame, id).
    std::vector<TrackBox> finalize() const;

private:
    std::optional<BoundingBox> frame_extent(const FrameObservation& obs) const;

    TrackerConfig cfg_;
    TrackerState state_;
};

inline std::optional<BoundingBox> Tracker::frame_extent(const FrameObservation& obs) const {
    if (obs.image_width > 0.0 && obs.image_height > 0.0) {
        return BoundingBox(0.0, 0.0, obs.image_width, obs.image_height);
    }
    double w = 1.0, h = 1.0;
    for (const auto& d : obs.detections) {
        w = std::max(w, d.box.x2());
        h = std::max(h, d.box.y2());
    }
    for (const auto& t : state_.tracks) {
        if (t.status != TrackStatus::Removed && t.predicted) {
            w = std::max(w, t.predicted->x2());
            h = std::max(h, t.predicted->y2());
        }
    }
    return BoundingBox(0.0, 0.0, w + 1.0, h + 1.0);
}

inline std::vector<TrackBox> Tracker::step(const FrameObservation& obs, const AffineTransform& camera_in) {
    if (state_.last_frame && obs.frame <= *state_.last_frame) {
        throw OutOfOrderFrame("frame " + std::to_string(obs.frame) + " does not follow frame " +
                              std::to_string(*state_.last_frame));
    }
    state_.last_frame = obs.frame;
    const int now = obs.frame;

    // (1) camera-motion intensity; an unusable transform degrades to a static camera
    AffineTransform camera = camera_in;
    double intensity = 0.0;
    try {
        if (!camera.is_finite()) {
            throw ZeroNorm("non-finite camera transform");
        }
        intensity = camera_motion_intensity(camera);
    } catch (const ZeroNorm&) {
        camera = AffineTransform::identity();
        intensity = 0.0;
    }

    // (2) motion prediction for every live track
    std::vector<int> live;
    for (int i = 0; i < static_cast<int>(state_.tracks.size()); ++i) {
        if (state_.tracks[i].status != TrackStatus::Removed) {
            live.push_back(i);
        }
    }
    std::vector<char> excluded(live.size(), 0);
    parallel_for(live.size(), cfg_.threads, [&](std::size_t k) {
        Track& t = state_.tracks[static_cast<std::size_t>(live[k])];
        try {
            t.kalman = predict(t.kalman, camera, intensity, cfg_.motion);
            t.predicted = t.kalman.box();
        } catch (const Error&) {
            excluded[k] = 1;  // numeric failure: the track sits this frame out
            t.predicted.reset();
        }
    });

    // (3) merged NMS over predicted track boxes and detections
    std::vector<BoundingBox> merged;
    std::vector<double> merged_scores;
    for (std::size_t k = 0; k < live.size(); ++k) {
        if (excluded[k]) {
            continue;
        }
        const Track& t = state_.tracks[static_cast<std::size_t>(live[k])];
        merged.push_back(*t.predicted);
        merged_scores.push_back(t.score * std::pow(cfg_.score_decay, t.lost_length));
    }
    const int n_track_boxes = static_cast<int>(merged.size());
    for (const auto& d : obs.detections) {
        merged.push_back(d.box);
        merged_scores.push_back(d.score);
    }
    const NmsResult sup = nms_detailed(merged, merged_scores, cfg_.nms_threshold);

    // A track box suppressed by another track box sits this frame out. Detections
    // suppressed by a detection are dropped. Detections that suppressed, or were
    // suppressed by, a track box stay as candidates but stand for that track and
    // cannot seed a new one.
    std::vector<char> claims_track(merged.size(), 0);
    {
        int slot = 0;
        for (std::size_t k = 0; k < live.size(); ++k) {
            if (excluded[k]) {
                continue;
            }
            const int by = sup.suppressed_by[slot++];
            if (by >= n_track_boxes) {
                claims_track[static_cast<std::size_t>(by)] = 1;
            } else if (by >= 0) {
                excluded[k] = 1;
            }
        }
    }
    std::vector<int> cand_det;  // candidate index -> detection index
    std::vector<char> cand_claimed;
    for (int i = n_track_boxes; i < static_cast<int>(merged.size()); ++i) {
        const int by = sup.suppressed_by[i];
        if (by >= n_track_boxes) {
            continue;
        }
        cand_det.push_back(i - n_track_boxes);
        cand_claimed.push_back(by >= 0 || claims_track[static_cast<std::size_t>(i)]);
    }

    // (4) spatial index over surviving candidates, (5) per-track blocking and costs
    std::vector<BoundingBox> cand_boxes;
    std::vector<CandidateInput> cand_inputs;
    for (int d : cand_det) {
        const Detection& det = obs.detections[static_cast<std::size_t>(d)];
        cand_boxes.push_back(det.box);
        cand_inputs.push_back({det.box, &det.feature, det.visibility});
    }
    std::vector<int> assoc_tracks;  // row -> index into state_.tracks
    std::vector<BoundingBox> query_boxes;
    for (std::size_t k = 0; k < live.size(); ++k) {
        if (!excluded[k]) {
            assoc_tracks.push_back(live[k]);
            query_boxes.push_back(*state_.tracks[static_cast<std::size_t>(live[k])].predicted);
        }
    }
    std::vector<std::vector<int>> blocks(assoc_tracks.size());
    switch (cfg_.blocking) {
        case BlockingMethod::Integral: {
            const auto extent = frame_extent(obs);
            const GridGeometry grid(extent->x2(), extent->y2(), cfg_.grid_m, cfg_.grid_n);
            const auto index = build_integral(build_feature_map(cand_boxes, grid));
            std::vector<std::uint8_t> scratch;
            for (std::size_t r = 0; r < query_boxes.size(); ++r) {
                blocks[r] = query_region(index, query_boxes[r].expanded(cfg_.blocking_expand), scratch);
            }
            break;
        }
        case BlockingMethod::Iou:
            blocks = iou_blocking(query_boxes, cand_boxes, cfg_.blocking_expand);
            break;
        case BlockingMethod::None:
            for (auto& b : blocks) {
                b.resize(cand_boxes.size());
                std::iota(b.begin(), b.end(), 0);
            }
            break;
    }
    std::vector<TrackCostInput> rows;
    rows.reserve(assoc_tracks.size());
    for (int ti : assoc_tracks) {
        const Track& t = state_.tracks[static_cast<std::size_t>(ti)];
        rows.push_back({&t.kalman, &t.gallery, t.lost_length});
    }
    const auto cost = build_cost_matrix(rows, cand_inputs, blocks, now, cfg_.motion, cfg_.fusion,
                                        cfg_.association, cfg_.threads);

    // (6) assignment
    const Assignment match = cfg_.association.greedy ? assign_greedy(cost.costs) : assign(cost.costs);

    // (7) lifecycle
    std::vector<char> matched(state_.tracks.size(), 0);
    std::vector<char> det_used(cand_det.size(), 0);
    for (const auto& [r, c] : match.matches) {
        Track& t = state_.tracks[static_cast<std::size_t>(assoc_tracks[static_cast<std::size_t>(r)])];
        const Detection& det = obs.detections[static_cast<std::size_t>(cand_det[static_cast<std::size_t>(c)])];
        det_used[static_cast<std::size_t>(c)] = 1;
        try {
            t.kalman = update(t.kalman, det.box, cfg_.motion);
        } catch (const SingularInnovation&) {
            continue;  // handled as unmatched below
        }
        matched[static_cast<std::size_t>(assoc_tracks[static_cast<std::size_t>(r)])] = 1;
        if (det.has_feature()) {
            t.gallery.push(GalleryEntry::from(det.box, det.feature, det.visibility, now));
        }
        t.lost_length = 0;
        t.status = TrackStatus::Active;
        t.score = det.score;
        t.history.push_back({now, t.kalman.box(), det.score});
    }
    for (int ti : live) {
        Track& t = state_.tracks[static_cast<std::size_t>(ti)];
        if (matched[static_cast<std::size_t>(ti)]) {
            continue;
        }
        ++t.lost_length;
        t.status = t.lost_length > cfg_.max_time_gap() ? TrackStatus::Removed : TrackStatus::Lost;
    }
    for (std::size_t c = 0; c < cand_det.size(); ++c) {
        if (det_used[c] || cand_claimed[c]) {
            continue;
        }
        const Detection& det = obs.detections[static_cast<std::size_t>(cand_det[c])];
        if (det.score < cfg_.detection_min_score) {
            continue;
        }
        Track t{state_.next_id++, initiate(det.box, cfg_.motion), Gallery(cfg_.fusion.max_gallery), 0,
                TrackStatus::Active, det.score, det.box, {}};
        if (det.has_feature()) {
            t.gallery.push(GalleryEntry::from(det.box, det.feature, det.visibility, now));
        }
        t.history.push_back({now, det.box, det.score});
        state_.tracks.push_back(std::move(t));
    }

    // (8) active boxes; overlapping outputs keep the higher-scored (then older) track
    std::vector<int> active;
    std::vector<BoundingBox> boxes;
    std::vector<double> scores;
    for (int i = 0; i < static_cast<int>(state_.tracks.size()); ++i) {
        const Track& t = state_.tracks[static_cast<std::size_t>(i)];
        if (t.status == TrackStatus::Active) {
            active.push_back(i);
            boxes.push_back(t.history.back().box);
            scores.push_back(t.score);
        }
    }
    const NmsResult out_nms = nms_detailed(boxes, scores, cfg_.nms_threshold);
    std::vector<TrackBox> out;
    for (std::size_t k = 0; k < active.size(); ++k) {
        Track& t = state_.tracks[static_cast<std::size_t>(active[k])];
        if (out_nms.suppressed_by[k] >= 0) {
            t.history.pop_back();
            t.lost_length = 1;
            t.status = t.lost_length > cfg_.max_time_gap() ? TrackStatus::Removed : TrackStatus::Lost;
            continue;
        }
        out.push_back({now, t.id, t.history.back().box, t.score});
    }
    return out;
}

inline std::vector<TrackBox> Tracker::finalize() const {
    std::vector<TrackBox> out;
    for (const Track& t : state_.tracks) {
        if (static_cast<int>(t.history.size()) < cfg_.min_track_length) {
            continue;
        }
        for (const auto& h : t.history) {
            out.push_back({h.frame, t.id, h.box, h.score});
        }
    }
    std::sort(out.begin(), out.end(), [](const TrackBox& a, const TrackBox& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    return out;
}

}  // namespace mif
