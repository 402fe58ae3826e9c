// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mif/core_types.hpp"
#include "mif/text.hpp"
#include "mif/tracker.hpp"

namespace mif {

/// One MOTChallenge CSV line. Coordinates are kept exactly as written in the file
/// (1-based top-left, width, height).
struct MotRecord {
    int frame = 1;
    int id = -1;
    double x = 0.0, y = 0.0, w = 1.0, h = 1.0;
    double conf = 1.0;
    double a = -1.0, b = -1.0, c = -1.0;

    /// 0-based corner form.
    BoundingBox box() const { return BoundingBox(x - 1.0, y - 1.0, x - 1.0 + w, y - 1.0 + h); }

    static MotRecord from_box(int frame, int id, const BoundingBox& box, double conf) {
        return {frame, id, box.x1() + 1.0, box.y1() + 1.0, box.width(), box.height(), conf, -1, -1, -1};
    }

    friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

struct MotReadResult {
    std::vector<MotRecord> records;  // file order
    int skipped_non_positive = 0;    // lines with w <= 0 or h <= 0
};

/// Parses MOT CSV lines with at least 7 comma-separated fields. Missing trailing
/// fields default to -1. Throws ParseError with the offending line number.
inline MotReadResult read_mot_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open MOT file: " + path);
    }
    MotReadResult out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::is_blank(line)) {
            continue;
        }
        const auto f = text::split(line, ",", false);
        if (f.size() < 7) {
            throw ParseError(path, lineno, "expected at least 7 comma-separated fields, got " + std::to_string(f.size()));
        }
        double v[10] = {0, 0, 0, 0, 0, 0, 0, -1, -1, -1};
        for (std::size_t i = 0; i < std::min<std::size_t>(f.size(), 10); ++i) {
            if (!text::parse_double(f[i], v[i])) {
                throw ParseError(path, lineno, "invalid number '" + std::string(f[i]) + "' in field " + std::to_string(i + 1));
            }
        }
        if (v[0] < 1 || v[0] != static_cast<int>(v[0]) || v[1] != static_cast<int>(v[1])) {
            throw ParseError(path, lineno, "frame must be an integer >= 1 and id an integer");
        }
        if (!(v[4] > 0.0) || !(v[5] > 0.0)) {
            ++out.skipped_non_positive;
            continue;
        }
        out.records.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]});
    }
    return out;
}

/// Detections grouped by frame (ascending); within a frame, file order is kept.
struct DetectionSequence {
    std::map<int, std::vector<Detection>> frames;
    int skipped_non_positive = 0;

    int last_frame() const { return frames.empty() ? 0 : frames.rbegin()->first; }
};

/// MOT det.txt ingestion. Scores are clamped into [0,1].
inline DetectionSequence read_detections(const std::string& path) {
    auto raw = read_mot_records(path);
    DetectionSequence seq;
    seq.skipped_non_positive = raw.skipped_non_positive;
    for (const auto& r : raw.records) {
        Detection d;
        d.box = r.box();
        d.score = std::clamp(r.conf, 0.0, 1.0);
        seq.frames[r.frame].push_back(std::move(d));
    }
    return seq;
}

/// Ground truth grouped by frame. Lines whose 7th field is 0 (MOTChallenge
/// "ignore" flag) are dropped.
inline std::map<int, std::vector<MotRecord>> group_by_frame(std::span<const MotRecord> records, bool drop_ignored) {
    std::map<int, std::vector<MotRecord>> out;
    for (const auto& r : records) {
        if (drop_ignored && r.conf == 0.0) {
            continue;
        }
        out[r.frame].push_back(r);
    }
    return out;
}

inline std::string format_record(const MotRecord& r) {
    using text::format_double;
    std::string s;
    s += std::to_string(r.frame);
    s += ',';
    s += std::to_string(r.id);
    for (double v : {r.x, r.y, r.w, r.h, r.conf, r.a, r.b, r.c}) {
        s += ',';
        s += format_double(v);
    }
    return s;
}

inline void write_records(std::span<const MotRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write MOT file: " + path);
    }
    for (const auto& r : records) {
        out << format_record(r) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

/// `frame,id,x,y,w,h,conf,-1,-1,-1` per (frame, id), sorted, 1-based coordinates.
inline void write_results(std::span<const TrackBox> tracks, const std::string& path) {
    std::vector<MotRecord> recs;
    recs.reserve(tracks.size());
    for (const auto& t : tracks) {
        recs.push_back(MotRecord::from_box(t.frame, t.id, t.box, t.score));
    }
    std::sort(recs.begin(), recs.end(), [](const MotRecord& a, const MotRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    write_records(recs, path);
}

}  // namespace mif
