// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "mif/alignment.hpp"
#include "mif/mot_io.hpp"
#include "mif/synthetic.hpp"
#include "mif/tracker.hpp"

namespace mif {

/// Image size of a sequence; zero means unknown.
struct SequenceInfo {
    int image_width = 0;
    int image_height = 0;
};

/// Everything a run reads from a JSON config file.
struct RunConfig {
    TrackerConfig tracker;
    EccParams ecc;
    int ecc_downscale = 0;  // halvings applied to frames before alignment
    SequenceInfo sequence;
};

namespace detail {

using json = nlohmann::json;

/// Rejects keys outside `allowed` so that typos fail loudly.
inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw InvalidArgument("config: '" + where + "' must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) {
            throw InvalidArgument("config: unknown key '" + where + "." + key + "'");
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, const std::string& where, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("config: '" + where + "." + key + "' has the wrong type");
    }
}

inline json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
}

inline void apply_tracker(const json& j, TrackerConfig& c) {
    const std::string w = "tracker";
    check_keys(j, w, {"nms_threshold", "detection_min_score", "camera_motion", "time_gap_with_camera_motion",
                      "time_gap_static", "min_track_length", "blocking_expand", "grid_m", "grid_n", "blocking",
                      "score_decay", "threads"});
    read_field(j, "nms_threshold", w, c.nms_threshold);
    read_field(j, "detection_min_score", w, c.detection_min_score);
    read_field(j, "camera_motion", w, c.camera_motion);
    read_field(j, "time_gap_with_camera_motion", w, c.time_gap_with_camera_motion);
    read_field(j, "time_gap_static", w, c.time_gap_static);
    read_field(j, "min_track_length", w, c.min_track_length);
    read_field(j, "blocking_expand", w, c.blocking_expand);
    read_field(j, "grid_m", w, c.grid_m);
    read_field(j, "grid_n", w, c.grid_n);
    read_field(j, "score_decay", w, c.score_decay);
    read_field(j, "threads", w, c.threads);
    std::string blocking;
    read_field(j, "blocking", w, blocking);
    if (!blocking.empty()) c.blocking = parse_blocking_method(blocking);
}

inline void apply_motion(const json& j, MotionConfig& c) {
    const std::string w = "motion";
    check_keys(j, w, {"alpha", "dt", "std_weight_position", "std_weight_velocity", "std_weight_measurement",
                      "init_position_factor", "init_velocity_factor", "min_size", "mode"});
    read_field(j, "alpha", w, c.alpha);
    read_field(j, "dt", w, c.dt);
    read_field(j, "std_weight_position", w, c.std_weight_position);
    read_field(j, "std_weight_velocity", w, c.std_weight_velocity);
    read_field(j, "std_weight_measurement", w, c.std_weight_measurement);
    read_field(j, "init_position_factor", w, c.init_position_factor);
    read_field(j, "init_velocity_factor", w, c.init_velocity_factor);
    read_field(j, "min_size", w, c.min_size);
    std::string mode;
    read_field(j, "mode", w, mode);
    if (!mode.empty()) c.mode = parse_motion_mode(mode);
}

inline void apply_fusion(const json& j, FusionConfig& c) {
    const std::string w = "fusion";
    check_keys(j, w, {"lambda_scale", "lambda_aspect", "lambda_visibility", "lambda_time", "max_gallery", "mode"});
    read_field(j, "lambda_scale", w, c.lambda_scale);
    read_field(j, "lambda_aspect", w, c.lambda_aspect);
    read_field(j, "lambda_visibility", w, c.lambda_visibility);
    read_field(j, "lambda_time", w, c.lambda_time);
    read_field(j, "max_gallery", w, c.max_gallery);
    std::string mode;
    read_field(j, "mode", w, mode);
    if (!mode.empty()) c.mode = parse_fusion_mode(mode);
}

inline void apply_association(const json& j, AssociationConfig& c) {
    const std::string w = "association";
    check_keys(j, w, {"miss_rate", "gate", "greedy"});
    read_field(j, "miss_rate", w, c.miss_rate);
    read_field(j, "gate", w, c.gate);
    read_field(j, "greedy", w, c.greedy);
}

inline void apply_ecc(const json& j, EccParams& c, int& downscale) {
    const std::string w = "ecc";
    check_keys(j, w, {"max_iterations", "epsilon", "pyramid_levels", "gaussian_blur_sigma", "downscale"});
    read_field(j, "max_iterations", w, c.max_iterations);
    read_field(j, "epsilon", w, c.epsilon);
    read_field(j, "pyramid_levels", w, c.pyramid_levels);
    read_field(j, "gaussian_blur_sigma", w, c.gaussian_blur_sigma);
    read_field(j, "downscale", w, downscale);
}

}  // namespace detail

/// Overlays a parsed JSON document on `cfg`; absent keys keep their values.
/// Throws InvalidArgument on unknown keys, wrong types or out-of-range values.
inline void apply_config(const nlohmann::json& j, RunConfig& cfg) {
    detail::check_keys(j, "<root>", {"tracker", "motion", "fusion", "association", "ecc", "sequence"});
    if (j.contains("tracker")) detail::apply_tracker(j["tracker"], cfg.tracker);
    if (j.contains("motion")) detail::apply_motion(j["motion"], cfg.tracker.motion);
    if (j.contains("fusion")) detail::apply_fusion(j["fusion"], cfg.tracker.fusion);
    if (j.contains("association")) detail::apply_association(j["association"], cfg.tracker.association);
    if (j.contains("ecc")) detail::apply_ecc(j["ecc"], cfg.ecc, cfg.ecc_downscale);
    if (j.contains("sequence")) {
        const auto& s = j["sequence"];
        detail::check_keys(s, "sequence", {"image_width", "image_height"});
        detail::read_field(s, "image_width", "sequence", cfg.sequence.image_width);
        detail::read_field(s, "image_height", "sequence", cfg.sequence.image_height);
    }
    cfg.tracker.validate();
    cfg.ecc.validate();
    if (cfg.ecc_downscale < 0 || cfg.sequence.image_width < 0 || cfg.sequence.image_height < 0) {
        throw InvalidArgument("config: ecc.downscale and sequence sizes must be non-negative");
    }
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    apply_config(detail::parse_json_file(path), cfg);
    return cfg;
}

/// Serializes the settings that `apply_config` reads back.
inline nlohmann::json to_json(const RunConfig& cfg) {
    const auto& t = cfg.tracker;
    nlohmann::json j;
    j["tracker"] = {{"nms_threshold", t.nms_threshold},
                    {"detection_min_score", t.detection_min_score},
                    {"camera_motion", t.camera_motion},
                    {"time_gap_with_camera_motion", t.time_gap_with_camera_motion},
                    {"time_gap_static", t.time_gap_static},
                    {"min_track_length", t.min_track_length},
                    {"blocking_expand", t.blocking_expand},
                    {"grid_m", t.grid_m},
                    {"grid_n", t.grid_n},
                    {"blocking", std::string(to_string(t.blocking))},
                    {"score_decay", t.score_decay},
                    {"threads", t.threads}};
    const auto& m = t.motion;
    j["motion"] = {{"alpha", m.alpha},
                   {"dt", m.dt},
                   {"std_weight_position", m.std_weight_position},
                   {"std_weight_velocity", m.std_weight_velocity},
                   {"std_weight_measurement", m.std_weight_measurement},
                   {"init_position_factor", m.init_position_factor},
                   {"init_velocity_factor", m.init_velocity_factor},
                   {"min_size", m.min_size},
                   {"mode", std::string(to_string(m.mode))}};
    const auto& f = t.fusion;
    j["fusion"] = {{"lambda_scale", f.lambda_scale},
                   {"lambda_aspect", f.lambda_aspect},
                   {"lambda_visibility", f.lambda_visibility},
                   {"lambda_time", f.lambda_time},
                   {"max_gallery", f.max_gallery},
                   {"mode", std::string(to_string(f.mode))}};
    j["association"] = {{"miss_rate", t.association.miss_rate}, {"gate", t.association.gate}, {"greedy", t.association.greedy}};
    j["ecc"] = {{"max_iterations", cfg.ecc.max_iterations},
                {"epsilon", cfg.ecc.epsilon},
                {"pyramid_levels", cfg.ecc.pyramid_levels},
                {"gaussian_blur_sigma", cfg.ecc.gaussian_blur_sigma},
                {"downscale", cfg.ecc_downscale}};
    j["sequence"] = {{"image_width", cfg.sequence.image_width}, {"image_height", cfg.sequence.image_height}};
    return j;
}

/// Scene description for the generator: `{"seed": N, "scene": {...}}`.
struct SceneSpec {
    SyntheticScene scene;
    std::uint64_t seed = 0;
};

inline SceneSpec load_scene_spec(const std::string& path) {
    using detail::read_field;
    const auto j = detail::parse_json_file(path);
    detail::check_keys(j, "<root>", {"seed", "scene"});
    SceneSpec spec;
    read_field(j, "seed", "<root>", spec.seed);
    if (!j.contains("scene")) {
        return spec;
    }
    const auto& s = j["scene"];
    const std::string w = "scene";
    detail::check_keys(s, w, {"n_targets", "n_frames", "image_width", "image_height", "targets", "min_height",
                              "max_height", "min_aspect", "max_aspect", "max_speed", "min_lifetime_fraction", "pan_x",
                              "pan_y", "zoom", "camera_shake", "affine_noise", "detection_noise", "miss_probability",
                              "false_positive_rate", "occlusion_miss_visibility", "min_visible_fraction",
                              "feature_dim", "feature_noise", "render"});
    auto& sc = spec.scene;
    read_field(s, "n_targets", w, sc.n_targets);
    read_field(s, "n_frames", w, sc.n_frames);
    read_field(s, "image_width", w, sc.image_width);
    read_field(s, "image_height", w, sc.image_height);
    read_field(s, "min_height", w, sc.min_height);
    read_field(s, "max_height", w, sc.max_height);
    read_field(s, "min_aspect", w, sc.min_aspect);
    read_field(s, "max_aspect", w, sc.max_aspect);
    read_field(s, "max_speed", w, sc.max_speed);
    read_field(s, "min_lifetime_fraction", w, sc.min_lifetime_fraction);
    read_field(s, "pan_x", w, sc.pan_x);
    read_field(s, "pan_y", w, sc.pan_y);
    read_field(s, "zoom", w, sc.zoom);
    read_field(s, "camera_shake", w, sc.camera_shake);
    read_field(s, "affine_noise", w, sc.affine_noise);
    read_field(s, "detection_noise", w, sc.detection_noise);
    read_field(s, "miss_probability", w, sc.miss_probability);
    read_field(s, "false_positive_rate", w, sc.false_positive_rate);
    read_field(s, "occlusion_miss_visibility", w, sc.occlusion_miss_visibility);
    read_field(s, "min_visible_fraction", w, sc.min_visible_fraction);
    read_field(s, "feature_dim", w, sc.feature_dim);
    read_field(s, "feature_noise", w, sc.feature_noise);
    read_field(s, "render", w, sc.render);
    if (s.contains("targets")) {
        const auto& ts = s["targets"];
        if (!ts.is_array()) {
            throw InvalidArgument("config: 'scene.targets' must be an array");
        }
        for (const auto& t : ts) {
            detail::check_keys(t, "scene.targets[]", {"spawn_frame", "death_frame", "cx", "cy", "w", "h", "vx", "vy"});
            SyntheticTarget target;
            const std::string tw = "scene.targets[]";
            read_field(t, "spawn_frame", tw, target.spawn_frame);
            read_field(t, "death_frame", tw, target.death_frame);
            read_field(t, "cx", tw, target.cx);
            read_field(t, "cy", tw, target.cy);
            read_field(t, "w", tw, target.w);
            read_field(t, "h", tw, target.h);
            read_field(t, "vx", tw, target.vx);
            read_field(t, "vy", tw, target.vy);
            sc.targets.push_back(target);
        }
    }
    sc.validate();
    return spec;
}

/// Writes a generated scene as a MOTChallenge-style directory:
///
///     gt.txt  det.txt  affines.txt  [features.txt]  [frames/000001.pgm ...]  config.json
///
/// Line k of affines.txt maps frame k into frame k + 1. config.json holds the
/// tracker settings the scene implies, ready for `track --config`.
inline void write_scene(const GeneratedScene& g, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
    write_records(g.ground_truth, (dir / "gt.txt").string());
    write_records(g.detections, (dir / "det.txt").string());
    save_affines(g.affines, (dir / "affines.txt").string());
    if (!g.det_features.empty()) {
        std::ofstream out(dir / "features.txt", std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + (dir / "features.txt").string());
        }
        out << "dim " << g.det_features.front().size() << '\n';
        int frame = -1, index = 0;
        for (std::size_t i = 0; i < g.detections.size(); ++i) {
            index = g.detections[i].frame == frame ? index + 1 : 0;
            frame = g.detections[i].frame;
            out << frame << ' ' << index << ' ' << text::format_double(g.det_visibility[i]);
            for (float v : g.det_features[i]) {
                out << ' ' << text::format_double(v);
            }
            out << '\n';
        }
    }
    if (!g.frames.empty()) {
        fs::create_directories(dir / "frames", ec);
        for (std::size_t k = 0; k < g.frames.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "%06zu.pgm", k + 1);
            write_pgm(g.frames[k], (dir / "frames" / name).string());
        }
    }
    nlohmann::json j;
    j["tracker"] = {{"camera_motion", g.camera_motion}};
    if (g.detection_noise > 0.0) {
        j["motion"] = {{"std_weight_measurement", g.detection_noise}};  // filter noise matches the sensor
    }
    j["sequence"] = {{"image_width", g.image_width}, {"image_height", g.image_height}};
    std::ofstream out(dir / "config.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("cannot write " + (dir / "config.json").string());
    }
}

}  // namespace mif
