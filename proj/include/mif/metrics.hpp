// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mif/association.hpp"
#include "mif/mot_io.hpp"
#include "mif/text.hpp"

namespace mif {

struct EvalResult {
    double mota = 0.0;
    double idf1 = 0.0;
    long fp = 0;
    long fn = 0;
    long id_switches = 0;
    long fragmentations = 0;
    long gt_count = 0;    // ground-truth boxes
    long hyp_count = 0;   // hypothesis boxes
    long matches = 0;
    long idtp = 0;
    int gt_tracks = 0;
    double mt = 0.0;  // fraction of gt trajectories covered >= 80%
    double ml = 0.0;  // fraction covered < 20%
    int frames = 0;
};

/// CLEAR-MOT and identity metrics.
///
/// Per frame, last frame's correspondences are kept while their IoU stays at or
/// above the threshold; remaining boxes are matched by Hungarian assignment on
/// 1 - IoU. An identity switch is counted when a ground-truth object is matched to
/// a different hypothesis than at its previous match. A fragmentation is a
/// tracked -> untracked transition of a ground-truth object that is still present.
/// IDF1 uses a global one-to-one trajectory matching maximizing co-matched frames.
/// Frames are the union of both inputs. Throws EmptyGroundTruth without gt boxes.
inline EvalResult evaluate(std::span<const MotRecord> gt, std::span<const MotRecord> hyp, double iou_threshold = 0.5) {
    if (gt.empty()) {
        throw EmptyGroundTruth("evaluate: ground truth is empty");
    }
    const auto gt_frames = group_by_frame(gt, false);
    const auto hyp_frames = group_by_frame(hyp, false);
    std::set<int> frames;
    for (const auto& [f, _] : gt_frames) frames.insert(f);
    for (const auto& [f, _] : hyp_frames) frames.insert(f);

    EvalResult res;
    res.frames = static_cast<int>(frames.size());
    std::map<int, int> prev_pairs;  // gt id -> hyp id, previous frame only
    std::map<int, int> last_hyp;    // gt id -> hyp id at its most recent match
    std::map<int, bool> was_tracked;
    std::map<int, std::pair<long, long>> coverage;  // gt id -> (matched, present)
    std::map<std::pair<int, int>, long> co_matched;   // (gt id, hyp id) -> frames with IoU >= thr
    std::map<int, long> gt_len, hyp_len;
    const std::vector<MotRecord> none;

    for (int f : frames) {
        const auto git = gt_frames.find(f);
        const auto hit = hyp_frames.find(f);
        const auto& g = git == gt_frames.end() ? none : git->second;
        const auto& h = hit == hyp_frames.end() ? none : hit->second;
        res.gt_count += static_cast<long>(g.size());
        res.hyp_count += static_cast<long>(h.size());

        std::vector<BoundingBox> gb, hb;
        for (const auto& r : g) gb.push_back(r.box());
        for (const auto& r : h) hb.push_back(r.box());
        std::vector<std::vector<double>> ious(g.size(), std::vector<double>(h.size(), 0.0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            ++gt_len[g[i].id];
            for (std::size_t j = 0; j < h.size(); ++j) {
                ious[i][j] = iou(gb[i], hb[j]);
                if (ious[i][j] >= iou_threshold) {
                    ++co_matched[{g[i].id, h[j].id}];
                }
            }
        }
        for (const auto& r : h) ++hyp_len[r.id];

        std::vector<int> g_match(g.size(), -1), h_match(h.size(), -1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto p = prev_pairs.find(g[i].id);
            if (p == prev_pairs.end()) continue;
            for (std::size_t j = 0; j < h.size(); ++j) {
                if (h[j].id == p->second && h_match[j] < 0 && ious[i][j] >= iou_threshold) {
                    g_match[i] = static_cast<int>(j);
                    h_match[j] = static_cast<int>(i);
                    break;
                }
            }
        }
        std::vector<int> gi, hj;
        for (std::size_t i = 0; i < g.size(); ++i) if (g_match[i] < 0) gi.push_back(static_cast<int>(i));
        for (std::size_t j = 0; j < h.size(); ++j) if (h_match[j] < 0) hj.push_back(static_cast<int>(j));
        CostMatrix cm(gi.size(), hj.size());
        for (std::size_t a = 0; a < gi.size(); ++a) {
            for (std::size_t b = 0; b < hj.size(); ++b) {
                const double v = ious[static_cast<std::size_t>(gi[a])][static_cast<std::size_t>(hj[b])];
                if (v >= iou_threshold) cm(a, b) = 1.0 - v;
            }
        }
        for (const auto& [a, b] : assign(cm).matches) {
            g_match[static_cast<std::size_t>(gi[static_cast<std::size_t>(a)])] = hj[static_cast<std::size_t>(b)];
            h_match[static_cast<std::size_t>(hj[static_cast<std::size_t>(b)])] = gi[static_cast<std::size_t>(a)];
        }

        prev_pairs.clear();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const int id = g[i].id;
            auto& cov = coverage[id];
            ++cov.second;
            if (g_match[i] < 0) {
                ++res.fn;
                if (was_tracked[id]) ++res.fragmentations;
                was_tracked[id] = false;
                continue;
            }
            const int hid = h[static_cast<std::size_t>(g_match[i])].id;
            ++res.matches;
            ++cov.first;
            const auto last = last_hyp.find(id);
            if (last != last_hyp.end() && last->second != hid) ++res.id_switches;
            last_hyp[id] = hid;
            prev_pairs[id] = hid;
            was_tracked[id] = true;
        }
        for (std::size_t j = 0; j < h.size(); ++j) {
            if (h_match[j] < 0) ++res.fp;
        }
    }

    res.mota = 1.0 - static_cast<double>(res.fp + res.fn + res.id_switches) / static_cast<double>(res.gt_count);

    res.gt_tracks = static_cast<int>(coverage.size());
    int mt = 0, ml = 0;
    for (const auto& [id, cov] : coverage) {
        const double ratio = static_cast<double>(cov.first) / static_cast<double>(cov.second);
        if (ratio >= 0.8) ++mt;
        if (ratio < 0.2) ++ml;
    }
    res.mt = static_cast<double>(mt) / res.gt_tracks;
    res.ml = static_cast<double>(ml) / res.gt_tracks;

    // identity matching: maximize co-matched frames over one-to-one id pairs
    std::vector<int> gids, hids;
    for (const auto& [id, _] : gt_len) gids.push_back(id);
    for (const auto& [id, _] : hyp_len) hids.push_back(id);
    if (!hids.empty()) {
        CostMatrix idc(gids.size(), hids.size(), 0.0);
        for (const auto& [key, n] : co_matched) {
            const auto r = std::lower_bound(gids.begin(), gids.end(), key.first) - gids.begin();
            const auto c = std::lower_bound(hids.begin(), hids.end(), key.second) - hids.begin();
            idc(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = -static_cast<double>(n);
        }
        for (const auto& [r, c] : assign(idc).matches) {
            res.idtp += static_cast<long>(-idc(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
        }
    }
    res.idf1 = 2.0 * static_cast<double>(res.idtp) / static_cast<double>(res.gt_count + res.hyp_count);
    return res;
}

/// Pooled result over several sequences: counts are summed and the ratios
/// recomputed from the sums (not averaged per sequence).
inline EvalResult aggregate(std::span<const EvalResult> parts) {
    EvalResult a;
    double mt = 0.0, ml = 0.0;
    for (const auto& r : parts) {
        a.fp += r.fp;
        a.fn += r.fn;
        a.id_switches += r.id_switches;
        a.fragmentations += r.fragmentations;
        a.gt_count += r.gt_count;
        a.hyp_count += r.hyp_count;
        a.matches += r.matches;
        a.idtp += r.idtp;
        a.gt_tracks += r.gt_tracks;
        a.frames += r.frames;
        mt += r.mt * r.gt_tracks;
        ml += r.ml * r.gt_tracks;
    }
    if (a.gt_count > 0) {
        a.mota = 1.0 - static_cast<double>(a.fp + a.fn + a.id_switches) / static_cast<double>(a.gt_count);
        a.idf1 = 2.0 * static_cast<double>(a.idtp) / static_cast<double>(a.gt_count + a.hyp_count);
    }
    if (a.gt_tracks > 0) {
        a.mt = mt / a.gt_tracks;
        a.ml = ml / a.gt_tracks;
    }
    return a;
}

inline std::string eval_csv_header() {
    return "name,mota,idf1,fp,fn,idsw,frag,gt,mt,ml";
}

inline std::string eval_csv_row(const std::string& name, const EvalResult& r) {
    using text::format_fixed;
    return name + "," + format_fixed(r.mota, 6) + "," + format_fixed(r.idf1, 6) + "," + std::to_string(r.fp) + "," +
           std::to_string(r.fn) + "," + std::to_string(r.id_switches) + "," + std::to_string(r.fragmentations) + "," +
           std::to_string(r.gt_count) + "," + format_fixed(r.mt, 4) + "," + format_fixed(r.ml, 4);
}

/// Fixed-width human-readable table, one row per entry.
inline std::string eval_table(std::span<const std::pair<std::string, EvalResult>> rows) {
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    using text::format_fixed;
    std::string out = pad("sequence", 16) + pad("MOTA", 9) + pad("IDF1", 9) + pad("FP", 8) + pad("FN", 8) +
                      pad("IDSW", 7) + pad("Frag", 7) + pad("GT", 8) + pad("MT", 8) + pad("ML", 8) + "\n";
    for (const auto& [name, r] : rows) {
        out += pad(name, 16) + pad(format_fixed(100.0 * r.mota, 2), 9) + pad(format_fixed(100.0 * r.idf1, 2), 9) +
               pad(std::to_string(r.fp), 8) + pad(std::to_string(r.fn), 8) + pad(std::to_string(r.id_switches), 7) +
               pad(std::to_string(r.fragmentations), 7) + pad(std::to_string(r.gt_count), 8) +
               pad(format_fixed(r.mt, 3), 8) + pad(format_fixed(r.ml, 3), 8) + "\n";
    }
    return out;
}

}  // namespace mif
