// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// when any fails. Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mif/alignment.hpp"
#include "mif/association.hpp"
#include "mif/config.hpp"
#include "mif/metrics.hpp"
#include "mif/pipeline.hpp"
#include "mif/spatial_index.hpp"
#include "mif/synthetic.hpp"
#include "mif/texture.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using mif::AffineTransform;
using mif::BoundingBox;
using clock_type = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::vector<BoundingBox> random_boxes(std::mt19937_64& rng, int n, double w, double h) {
    std::uniform_real_distribution<double> ux(-0.05 * w, 1.05 * w), uy(-0.05 * h, 1.05 * h), uh(20, 0.4 * h),
        ua(0.3, 0.6);
    std::vector<BoundingBox> out;
    for (int i = 0; i < n; ++i) {
        const double bh = uh(rng);
        out.push_back(BoundingBox::from_center_size(ux(rng), uy(rng), bh * ua(rng), bh));
    }
    return out;
}

// ------------------------------------------------------------------ 1
Outcome integral_exactness() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> cells(1, 32), count(0, 256);
    std::uniform_real_distribution<double> size(200, 2000);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double w = size(rng), h = size(rng);
        const mif::GridGeometry g(w, h, cells(rng), cells(rng));
        const auto dets = random_boxes(rng, count(rng), w, h);
        const auto index = mif::build_integral(mif::build_feature_map(dets, g));
        const auto q = random_boxes(rng, 1, w, h).front().expanded(1.5);
        mismatches += mif::query_region(index, q) != oracle::cell_overlap(g, dets, q);
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < 5.0, fmt("%.0f/1000 instances differ from the oracle, %.2f s", mismatches, s)};
}

// ------------------------------------------------------------------ 2
double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome blocking_speed() {
    constexpr double W = 1920, H = 1080;
    const mif::GridGeometry grid(W, H);  // 16 x 8
    const double expand = mif::TrackerConfig{}.blocking_expand;
    std::mt19937_64 rng(2);
    std::vector<double> integral_ns, iou_ns;
    for (int rep = 0; rep < 20; ++rep) {
        const auto tracks = random_boxes(rng, 500, W, H);
        const auto dets = random_boxes(rng, 500, W, H);
        const auto t0 = clock_type::now();
        const auto a = mif::integral_blocking(tracks, dets, expand, grid);
        const auto t1 = clock_type::now();
        const auto b = mif::iou_blocking(tracks, dets, expand);
        const auto t2 = clock_type::now();
        integral_ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
        iou_ns.push_back(std::chrono::duration<double, std::nano>(t2 - t1).count());
        if (a.size() != b.size()) return {false, "candidate lists differ in length"};
    }
    const double ratio = median(iou_ns) / median(integral_ns);
    return {ratio > 1.0, fmt("median integral %.3f ms, IOU %.3f ms, ratio %.2f", median(integral_ns) / 1e6,
                             median(iou_ns) / 1e6, ratio)};
}

// ------------------------------------------------------------------ 3
Outcome kalman_reduction() {
    mif::MotionConfig cfg;
    cfg.alpha = 1.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u(0, 1);
    const BoundingBox start = BoundingBox::from_center_size(200 + 800 * u(rng), 100 + 400 * u(rng), 20 + 60 * u(rng),
                                                            60 + 140 * u(rng));
    auto mine = mif::initiate(start, cfg);
    oracle::CvKalman ref;
    ref.dt = cfg.dt;
    ref.wp = cfg.std_weight_position;
    ref.wv = cfg.std_weight_velocity;
    ref.wm = cfg.std_weight_measurement;
    ref.x = {start.cx(), start.cy(), start.width(), start.height(), 0, 0, 0, 0};
    const double pf = cfg.init_position_factor * ref.wp, vf = cfg.init_velocity_factor * ref.wv;
    const double sd[8] = {pf * start.width(), pf * start.height(), pf * start.width(), pf * start.height(),
                          vf * start.width(), vf * start.height(), vf * start.width(), vf * start.height()};
    for (int i = 0; i < 8; ++i) ref.p[i][i] = sd[i] * sd[i];

    double worst = 0.0, min_eig = 1e300;
    double cx = start.cx(), cy = start.cy(), w = start.width(), h = start.height();
    const double vx = 3 * n01(rng), vy = n01(rng);
    for (int cycle = 0; cycle < 1000; ++cycle) {
        mine = mif::predict(mine, AffineTransform::identity(), 0.0, cfg);
        ref.predict();
        cx += vx;
        cy += vy;
        w = std::max(10.0, w + 0.3 * n01(rng));
        h = std::max(20.0, h + 0.6 * n01(rng));
        const auto z = BoundingBox::from_center_size(cx + 2 * n01(rng), cy + 2 * n01(rng), w, h);
        mine = mif::update(mine, z, cfg);
        ref.update({z.cx(), z.cy(), z.width(), z.height()});
        oracle::M8 p{};
        for (int i = 0; i < 8; ++i) {
            worst = std::max(worst, std::abs(mine.mean[i] - ref.x[i]) / std::max(1.0, std::abs(ref.x[i])));
            for (int j = 0; j < 8; ++j) {
                worst = std::max(worst, std::abs(mine.covariance(i, j) - ref.p[i][j]) / std::max(1.0, std::abs(ref.p[i][j])));
                p[i][j] = mine.covariance(i, j);
            }
        }
        min_eig = std::min(min_eig, oracle::min_eigenvalue(p));
    }
    return {worst <= 1e-9 && min_eig >= -1e-8,
            fmt("max relative deviation %.2e over 1000 cycles, min eigenvalue %.3e", worst, min_eig)};
}

// ------------------------------------------------------------------ 4
Outcome intensity_checks() {
    const bool identity_zero = mif::camera_motion_intensity(AffineTransform::identity()) == 0.0;
    const double hand = mif::camera_motion_intensity(AffineTransform::translation(10, 0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const AffineTransform wt(1 + 0.5 * u(rng), 0.5 * u(rng), 20 * u(rng), 0.5 * u(rng), 1 + 0.5 * u(rng),
                                 20 * u(rng));
        const double base = mif::camera_motion_intensity(wt);
        worst = std::max(worst, std::abs(base - oracle::intensity(wt)));
        const auto m = wt.matrix();
        for (double c : {0.5, 2.0, 10.0}) {
            const AffineTransform cw(c * m[0][0], c * m[0][1], c * m[0][2], c * m[1][0], c * m[1][1], c * m[1][2]);
            worst = std::max(worst, std::abs(mif::camera_motion_intensity(cw) - base));
        }
    }
    return {identity_zero && worst <= 1e-12 && std::abs(hand - 0.8599) <= 1e-4,
            fmt("identity %.0f, translation(10,0) %.6f, max scale/oracle deviation %.1e",
                identity_zero ? 0.0 : 1.0, hand, worst)};
}

// ------------------------------------------------------------------ 5
Outcome ecc_recovery() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lin(-0.05, 0.05), tr(-8.0, 8.0);
    int ok = 0;
    double slowest = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const AffineTransform a(1 + lin(rng), lin(rng), tr(rng), lin(rng), 1 + lin(rng), tr(rng));
        const mif::Texture tex(500 + trial);
        const auto prev = tex.render(256, 256, AffineTransform::identity());
        const auto cur = tex.render(256, 256, a.inverse());
        const auto t0 = clock_type::now();
        bool recovered = false;
        try {
            const auto r = mif::estimate_affine(prev, cur);
            const auto got = r.transform.apply(128, 128), want = a.apply(128, 128);
            recovered = std::hypot(got[0] - want[0], got[1] - want[1]) <= 0.5;
        } catch (const mif::Error&) {
        }
        const double s = seconds_since(t0);
        slowest = std::max(slowest, s);
        ok += recovered && s < 2.0;
    }
    return {ok >= 18, fmt("%.0f/20 trials within 0.5 px, slowest %.3f s", ok, slowest)};
}

// ------------------------------------------------------------------ 6
Outcome fusion_properties() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 3);
    std::uniform_int_distribution<int> q(0, 768), size(1, 26);
    double worst_sum = 0.0;
    bool nonneg = true, shift_exact = true;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = size(rng);
        std::vector<mif::ComponentDistances> raw(static_cast<std::size_t>(n));
        for (auto& c : raw) c = {u(rng), u(rng), u(rng), 30 * u(rng)};
        const auto w = mif::fuse_weights(raw, {});
        double total = 0.0;
        for (double x : w) {
            total += x;
            nonneg = nonneg && x >= 0.0;
        }
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));

        // dyadic values keep every shift and difference representable: equality is bitwise
        std::vector<mif::ComponentDistances> grid(static_cast<std::size_t>(n));
        for (auto& c : grid) c = {q(rng) / 256.0, q(rng) / 256.0, q(rng) / 256.0, q(rng) / 8.0};
        auto shifted = grid;
        for (auto& c : shifted) {
            c.scale += 1.0;
            c.aspect += 0.25;
            c.visibility += 2.0;
            c.time += 40.0;
        }
        shift_exact = shift_exact && mif::fuse_weights(grid, {}) == mif::fuse_weights(shifted, {});
    }
    const std::vector<mif::ComponentDistances> two = {{0, 0, 0, 0}, {1, 1, 1, 1}};
    const auto w2 = mif::fuse_weights(two, {});
    const bool hand = std::abs(w2[0] - 0.7311) <= 1e-4 && std::abs(w2[1] - 0.2689) <= 1e-4;
    return {worst_sum <= 1e-9 && nonneg && shift_exact && hand,
            fmt("max |sum - 1| %.1e, two-entry (%.4f, %.4f), ", worst_sum, w2[0], w2[1]) +
                (shift_exact ? "shifts bitwise invariant" : "shifts change the weights")};
}

// ------------------------------------------------------------------ 7
Outcome assignment_optimality() {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 7);
    std::uniform_int_distribution<int> cost(0, 1000);
    int wrong = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int r = dim(rng), c = dim(rng);
        // integer costs: sums are exact in double, so the comparison can be exact
        std::vector<std::vector<double>> v(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(c)));
        mif::CostMatrix m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = v[i][j] = cost(rng);
        const auto a = mif::assign(m);
        wrong += a.total_cost != oracle::exhaustive_min(v) || static_cast<int>(a.matches.size()) != std::min(r, c);
    }
    return {wrong == 0, fmt("%.0f/500 matrices differ from the exhaustive minimum", wrong)};
}

// ------------------------------------------------------------------ 8
fs::path data_dir() { return fs::path(MIFTRACK_DATA_DIR); }

/// Settings the written config.json would carry for a generated scene.
mif::RunConfig implied_config(const mif::GeneratedScene& g) {
    mif::RunConfig cfg;
    cfg.tracker.camera_motion = g.camera_motion;
    if (g.detection_noise > 0.0) cfg.tracker.motion.std_weight_measurement = g.detection_noise;
    cfg.sequence.image_width = g.image_width;
    cfg.sequence.image_height = g.image_height;
    return cfg;
}

Outcome ablation_ordering() {
    const auto t0 = clock_type::now();
    const auto spec = mif::load_scene_spec((data_dir() / "pan_scene.json").string());
    const auto g = mif::generate_scene(spec.scene, spec.seed);
    const auto inputs = mif::inputs_from_scene(g);
    double mota[3];
    const mif::MotionMode modes[3] = {mif::MotionMode::Integrated, mif::MotionMode::KalmanPlusEcc,
                                      mif::MotionMode::KalmanOnly};
    for (int i = 0; i < 3; ++i) {
        auto cfg = implied_config(g);
        cfg.tracker.motion.mode = modes[i];
        mota[i] = mif::evaluate(g.ground_truth, mif::to_records(mif::run_sequence(inputs, cfg).results)).mota;
    }
    const double s = seconds_since(t0);
    return {mota[0] >= mota[1] && mota[1] >= mota[2] && mota[0] >= 0.90 && s < 30.0,
            fmt("MOTA integrated %.4f, kalman_plus_ecc %.4f, kalman_only %.4f, %.1f s", mota[0], mota[1], mota[2], s)};
}

// ------------------------------------------------------------------ 9
Outcome fusion_vs_latest() {
    const auto spec = mif::load_scene_spec((data_dir() / "occlusion_scene.json").string());
    long fused = 0, latest = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto g = mif::generate_scene(spec.scene, seed);
        const auto inputs = mif::inputs_from_scene(g);
        for (const auto mode : {mif::FusionMode::FusedVector, mif::FusionMode::Latest}) {
            auto cfg = implied_config(g);
            cfg.tracker.camera_motion = true;  // 10-frame reconnection window, where appearance decides
            cfg.tracker.fusion.mode = mode;
            const auto e = mif::evaluate(g.ground_truth, mif::to_records(mif::run_sequence(inputs, cfg).results));
            (mode == mif::FusionMode::Latest ? latest : fused) += e.id_switches;
        }
    }
    return {fused <= latest, fmt("ID switches over seeds 1-10: adaptive fusion %.0f, latest feature %.0f",
                                 static_cast<double>(fused), static_cast<double>(latest))};
}

// ------------------------------------------------------------------ 10
Outcome metrics_hand_case() {
    auto rec = [](int f, int id, double x) { return mif::MotRecord{f, id, x, 10, 20, 50, 1, -1, -1, -1}; };
    std::vector<mif::MotRecord> gt, hyp;
    for (int f = 1; f <= 4; ++f) {
        gt.push_back(rec(f, 1, 10));
        gt.push_back(rec(f, 2, 200));
        hyp.push_back(rec(f, 10, f <= 2 ? 10 : 200));
        hyp.push_back(rec(f, 20, f <= 2 ? 200 : 10));
    }
    const auto swapped = mif::evaluate(gt, hyp);
    const auto perfect = mif::evaluate(gt, gt);
    return {swapped.id_switches == 2 && swapped.mota == 0.75 && perfect.mota == 1.0 && perfect.idf1 == 1.0,
            fmt("swap: IDSW %.0f MOTA %.4f; perfect: MOTA %.4f IDF1 %.4f", static_cast<double>(swapped.id_switches),
                swapped.mota, perfect.mota, perfect.idf1)};
}

// ------------------------------------------------------------------ 11
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_command(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "miftrack_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string mift = std::string("\"") + MIFTRACK_CLI + "\"";
    const fs::path scene = root / "scene";
    if (run_command(mift + " generate --spec \"" + (data_dir() / "demo_scene.json").string() + "\" --out \"" +
                    scene.string() + "\"") != 0) {
        return {false, "generate failed"};
    }
    // one set with precomputed affines and features, one aligning the rendered frames
    const std::vector<std::pair<std::string, std::string>> inputs = {
        {"scene", "--scene \"" + scene.string() + "\""},
        {"ecc", "--det \"" + (scene / "det.txt").string() + "\" --images \"" + (scene / "frames").string() +
                    "\" --config \"" + (scene / "config.json").string() + "\""}};
    int identical = 0, total = 0;
    std::size_t bytes = 0;
    for (const auto& [name, args] : inputs) {
        std::vector<std::string> results;
        for (const std::string threads : {"", "", " --threads 8"}) {
            const fs::path out = root / (name + std::to_string(results.size()));
            if (run_command(mift + " track " + args + threads + " --quiet --out \"" + out.string() + "\"") != 0) {
                return {false, "track failed for the " + name + " inputs"};
            }
            results.push_back(slurp(out / "results.txt"));
        }
        for (std::size_t i = 1; i < results.size(); ++i, ++total) identical += results[i] == results[0];
        bytes += results[0].size();
        if (results[0].empty()) return {false, "empty results for the " + name + " inputs"};
    }
    fs::remove_all(root);
    return {identical == total, fmt("%.0f/%.0f result files byte-identical to the first run (%.0f bytes)", identical,
                                    total, static_cast<double>(bytes))};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"integral index matches the cell-overlap oracle", integral_exactness},
        {"integral blocking faster than IOU blocking at n = 500", blocking_speed},
        {"Kalman filter reduces to the textbook filter", kalman_reduction},
        {"camera motion intensity", intensity_checks},
        {"ECC recovers small affines", ecc_recovery},
        {"fusion weight properties", fusion_properties},
        {"Hungarian assignment is optimal", assignment_optimality},
        {"motion ablation ordering on the pan scene", ablation_ordering},
        {"adaptive fusion vs latest feature on the occlusion scene", fusion_vs_latest},
        {"metrics on the hand-traced swap", metrics_hand_case},
        {"track output is deterministic", determinism},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!selected.empty() && std::find(selected.begin(), selected.end(), number) == selected.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
