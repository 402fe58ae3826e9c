// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// mift: command-line front end (track, eval, bench, align, generate).
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mif/config.hpp"
#include "mif/metrics.hpp"
#include "mif/pipeline.hpp"
#include "mif/spatial_index.hpp"
#include "mif/text.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Usage problems found after CLI11 parsing (conflicting or missing inputs).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) {
        throw mif::IoError("cannot write " + path.string());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw mif::IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------- track

struct TrackOptions {
    std::string scene;
    std::string det;
    std::string images;
    std::string affines;
    std::string features;
    bool histogram = false;
    std::string config;
    std::string out;
    int threads = 0;
    std::string motion_mode;
    std::string fusion_mode;
    std::string blocking;
    bool quiet = false;
};

int run_track(const TrackOptions& o) {
    std::string det = o.det, affines = o.affines, features = o.features, config = o.config, images = o.images;
    if (!o.scene.empty()) {
        const fs::path dir(o.scene);
        if (!fs::is_directory(dir)) {
            throw mif::IoError("scene directory not found: " + dir.string());
        }
        auto pick = [&](std::string& slot, const char* name) {
            if (slot.empty() && fs::exists(dir / name)) slot = (dir / name).string();
        };
        pick(det, "det.txt");
        pick(affines, "affines.txt");
        pick(config, "config.json");
        if (!o.histogram) pick(features, "features.txt");
        pick(images, "frames");
    }
    if (det.empty()) {
        throw UsageError("track: --det or --scene is required");
    }
    if (!features.empty() && o.histogram) {
        throw UsageError("track: --features and --histogram-features are exclusive");
    }
    if (o.histogram && images.empty()) {
        throw UsageError("track: --histogram-features needs --images");
    }

    mif::RunConfig cfg = config.empty() ? mif::RunConfig{} : mif::load_config(config);
    if (o.threads > 0) cfg.tracker.threads = o.threads;
    try {
        if (!o.motion_mode.empty()) cfg.tracker.motion.mode = mif::parse_motion_mode(o.motion_mode);
        if (!o.fusion_mode.empty()) cfg.tracker.fusion.mode = mif::parse_fusion_mode(o.fusion_mode);
        if (!o.blocking.empty()) cfg.tracker.blocking = mif::parse_blocking_method(o.blocking);
    } catch (const mif::InvalidArgument& e) {
        throw UsageError(std::string("track: ") + e.what());
    }
    cfg.tracker.validate();

    if (!fs::exists(det)) {
        throw mif::IoError("detection file not found: " + det);
    }
    mif::SequenceInputs in;
    in.detections = mif::read_detections(det);
    if (in.detections.skipped_non_positive > 0) {
        std::cerr << "warning: skipped " << in.detections.skipped_non_positive
                  << " detections with non-positive size\n";
    }

    std::vector<fs::path> frame_paths;
    if (!images.empty()) {
        frame_paths = mif::list_frames(images);
    }
    if (!affines.empty()) {
        in.affines = mif::load_affines(affines);
    } else if (frame_paths.size() >= 2) {
        const auto aligned = mif::align_frames(frame_paths, cfg.ecc, cfg.ecc_downscale);
        if (aligned.fallbacks > 0) {
            std::cerr << "warning: " << aligned.fallbacks << " frame pairs fell back to identity\n";
        }
        in.affines = aligned.affines;
    }
    if (!frame_paths.empty()) {
        in.last_frame = std::max(in.detections.last_frame(), static_cast<int>(frame_paths.size()));
    } else if (!in.affines.empty()) {
        in.last_frame = std::max(in.detections.last_frame(), static_cast<int>(in.affines.size()) + 1);
    }
    if (cfg.sequence.image_width <= 0 && !frame_paths.empty()) {
        const mif::GrayImage first = mif::read_pgm(frame_paths.front().string());
        cfg.sequence.image_width = first.width();
        cfg.sequence.image_height = first.height();
    }

    std::unique_ptr<mif::FeatureProvider> provider;
    if (!features.empty()) {
        provider = std::make_unique<mif::PrecomputedFileProvider>(features);
    } else if (o.histogram) {
        provider = std::make_unique<mif::ColorHistogramProvider>(images);
    }
    in.features = provider.get();

    const mif::SequenceRun run = mif::run_sequence(in, cfg);

    const fs::path out_dir(o.out);
    ensure_dir(out_dir);
    mif::write_results(run.results, (out_dir / "results.txt").string());

    std::string timing = "frame,ms\n";
    double total_ms = 0.0;
    for (std::size_t k = 0; k < run.frame_ms.size(); ++k) {
        timing += std::to_string(k + 1) + "," + mif::text::format_fixed(run.frame_ms[k], 4) + "\n";
        total_ms += run.frame_ms[k];
    }
    write_text(out_dir / "timing.csv", timing);

    std::set<int> ids;
    for (const auto& b : run.results) ids.insert(b.id);
    const std::size_t frames = run.frame_ms.size();
    const double hz = total_ms > 0.0 ? 1000.0 * static_cast<double>(frames) / total_ms : 0.0;
    nlohmann::json summary;
    summary["tracks"] = ids.size();
    summary["frames"] = frames;
    summary["boxes"] = run.results.size();
    summary["total_ms"] = total_ms;
    summary["hz"] = hz;
    summary["config"] = mif::to_json(cfg);
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    if (!o.quiet) {
        std::cout << "tracks " << ids.size() << "  frames " << frames << "  boxes " << run.results.size() << "  "
                  << mif::text::format_fixed(hz, 1) << " Hz\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::vector<std::string> gt;
    std::vector<std::string> res;
    std::vector<std::string> names;
    std::string csv;
    double iou = 0.5;
};

int run_eval(const EvalOptions& o) {
    if (o.gt.size() != o.res.size()) {
        throw UsageError("eval: --gt and --res must be given the same number of times");
    }
    if (!o.names.empty() && o.names.size() != o.gt.size()) {
        throw UsageError("eval: --name must be given once per sequence");
    }
    std::vector<std::pair<std::string, mif::EvalResult>> rows;
    std::vector<mif::EvalResult> parts;
    for (std::size_t k = 0; k < o.gt.size(); ++k) {
        const auto gt = mif::read_mot_records(o.gt[k]);
        const auto hyp = mif::read_mot_records(o.res[k]);
        const std::string name = o.names.empty() ? fs::path(o.res[k]).parent_path().filename().string() : o.names[k];
        parts.push_back(mif::evaluate(gt.records, hyp.records, o.iou));
        rows.emplace_back(name.empty() ? "seq" + std::to_string(k + 1) : name, parts.back());
    }
    rows.emplace_back("OVERALL", mif::aggregate(parts));

    std::cout << mif::eval_table(rows);
    std::string csv = mif::eval_csv_header() + "\n";
    for (const auto& [name, r] : rows) {
        csv += mif::eval_csv_row(name, r) + "\n";
    }
    if (o.csv.empty()) {
        std::cout << "\n" << csv;
    } else {
        write_text(o.csv, csv);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    std::vector<int> sizes{10, 50, 100, 200, 500, 1000};
    int repeats = 20;
    std::uint64_t seed = 1;
    int grid_m = 16;
    int grid_n = 8;
    double expand = 1.5;
    std::string csv;
};

std::vector<mif::BoundingBox> random_boxes(std::mt19937_64& rng, int n, double w, double h) {
    std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h), uh(40.0, 160.0), ua(0.35, 0.5);
    std::vector<mif::BoundingBox> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double bh = uh(rng), bw = bh * ua(rng);
        out.push_back(mif::BoundingBox::from_center_size(ux(rng), uy(rng), bw, bh));
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int run_bench(const BenchOptions& o) {
    if (o.repeats < 1) {
        throw UsageError("bench: --repeats must be at least 1");
    }
    if (o.sizes.empty() || std::any_of(o.sizes.begin(), o.sizes.end(), [](int n) { return n < 1; })) {
        throw UsageError("bench: --sizes must list positive counts");
    }
    constexpr double kW = 1920.0, kH = 1080.0;
    const mif::GridGeometry grid(kW, kH, o.grid_m, o.grid_n);
    using clock = std::chrono::steady_clock;
    auto ns = [](clock::duration d) { return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(d).count()); };

    std::string csv = "n,method,build_ns,query_ns,total_ns,speedup\n";
    std::mt19937_64 rng(o.seed);
    for (int n : o.sizes) {
        std::vector<double> ib, iq, it, ut;
        for (int rep = 0; rep < o.repeats; ++rep) {
            const auto tracks = random_boxes(rng, n, kW, kH);
            std::vector<mif::BoundingBox> dets;  // inside the image, like real detections
            for (const auto& b : random_boxes(rng, n, kW, kH)) {
                dets.push_back(mif::clip_box(b, kW, kH).value_or(b));
            }

            const auto t0 = clock::now();
            const auto index = mif::build_integral(mif::build_feature_map(dets, grid));
            const auto t1 = clock::now();
            std::vector<std::vector<int>> integral(tracks.size());
            std::vector<std::uint8_t> scratch;
            for (std::size_t t = 0; t < tracks.size(); ++t) {
                integral[t] = mif::query_region(index, tracks[t].expanded(o.expand), scratch);
            }
            const auto t2 = clock::now();
            const auto iou = mif::iou_blocking(tracks, dets, o.expand);
            const auto t3 = clock::now();

            // The grid is coarser than exact overlap: refined integral candidates must
            // equal the IOU candidates, and nothing the baseline finds may be missed.
            for (std::size_t t = 0; t < tracks.size(); ++t) {
                const auto region = tracks[t].expanded(o.expand);
                std::vector<int> refined;
                for (int d : integral[t]) {
                    if (mif::intersection_area(region, dets[static_cast<std::size_t>(d)]) > 0.0) {
                        refined.push_back(d);
                    }
                }
                if (refined != iou[t]) {
                    throw mif::Error("bench: integral and IOU blocking disagree at n=" + std::to_string(n));
                }
            }
            ib.push_back(ns(t1 - t0));
            iq.push_back(ns(t2 - t1));
            it.push_back(ns(t2 - t0));
            ut.push_back(ns(t3 - t2));
        }
        const double speedup = median(ut) / std::max(1.0, median(it));
        using mif::text::format_fixed;
        csv += std::to_string(n) + ",integral," + format_fixed(median(ib), 0) + "," + format_fixed(median(iq), 0) +
               "," + format_fixed(median(it), 0) + "," + format_fixed(speedup, 3) + "\n";
        csv += std::to_string(n) + ",iou,0," + format_fixed(median(ut), 0) + "," + format_fixed(median(ut), 0) +
               ",1.000\n";
    }
    std::cout << csv;
    if (!o.csv.empty()) {
        write_text(o.csv, csv);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- align

struct AlignOptions {
    std::string images;
    std::string out;
    std::string config;
    int downscale = -1;
};

int run_align(const AlignOptions& o) {
    mif::RunConfig cfg = o.config.empty() ? mif::RunConfig{} : mif::load_config(o.config);
    if (o.downscale >= 0) cfg.ecc_downscale = o.downscale;
    const auto frames = mif::list_frames(o.images);
    if (frames.size() < 2) {
        std::cerr << "warning: " << frames.size() << " frame(s) in " << o.images << "; no transitions to estimate\n";
    }
    const auto run = mif::align_frames(frames, cfg.ecc, cfg.ecc_downscale);
    if (run.fallbacks > 0) {
        std::cerr << "warning: " << run.fallbacks << " frame pairs fell back to identity\n";
    }
    const fs::path out(o.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    mif::save_affines(run.affines, out.string());
    std::cout << run.affines.size() << " transforms written to " << out.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_generate(const GenerateOptions& o) {
    mif::SceneSpec spec = mif::load_scene_spec(o.spec);
    if (o.seed) spec.seed = *o.seed;
    const auto g = mif::generate_scene(spec.scene, spec.seed);
    mif::write_scene(g, o.out);
    std::cout << "frames " << spec.scene.n_frames << "  gt boxes " << g.ground_truth.size() << "  detections "
              << g.detections.size() << "  -> " << o.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mift: multi-object tracking with camera-motion compensation and appearance fusion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mift 1.0.0");

    TrackOptions to;
    auto* track = app.add_subcommand("track", "Track a detection sequence");
    track->add_option("--scene", to.scene, "Scene directory (det.txt, affines.txt, features.txt, config.json, frames/)");
    track->add_option("--det", to.det, "MOTChallenge detection file");
    track->add_option("--images", to.images, "Directory of PGM frames (ECC alignment when no affines are given)");
    track->add_option("--affines", to.affines, "Precomputed frame-to-frame affines");
    track->add_option("--features", to.features, "Precomputed appearance features");
    track->add_flag("--histogram-features", to.histogram, "Color-histogram features from --images");
    track->add_option("--config", to.config, "JSON configuration");
    track->add_option("--out", to.out, "Output directory")->required();
    track->add_option("--threads", to.threads, "Worker cap")->check(CLI::Range(1, 256));
    track->add_option("--motion-mode", to.motion_mode, "integrated | kalman_plus_ecc | kalman_only | ecc_only");
    track->add_option("--fusion-mode", to.fusion_mode, "fused_vector | weighted_distance | average | latest");
    track->add_option("--blocking", to.blocking, "integral | iou | none");
    track->add_flag("--quiet", to.quiet, "No summary line");

    EvalOptions eo;
    auto* eval = app.add_subcommand("eval", "CLEAR-MOT and IDF1 evaluation");
    eval->add_option("--gt", eo.gt, "Ground-truth file (repeat per sequence)")->required();
    eval->add_option("--res", eo.res, "Result file (repeat per sequence)")->required();
    eval->add_option("--name", eo.names, "Sequence name (repeat per sequence)");
    eval->add_option("--csv", eo.csv, "Write the CSV here instead of stdout");
    eval->add_option("--iou", eo.iou, "Match threshold")->check(CLI::Range(0.0, 1.0));

    BenchOptions bo;
    auto* bench = app.add_subcommand("bench", "Integral vs IOU blocking timing");
    bench->add_option("--sizes", bo.sizes, "Track/detection counts")->delimiter(',');
    bench->add_option("--repeats", bo.repeats, "Runs per size");
    bench->add_option("--seed", bo.seed, "Random seed");
    bench->add_option("--grid-m", bo.grid_m, "Grid columns")->check(CLI::PositiveNumber);
    bench->add_option("--grid-n", bo.grid_n, "Grid rows")->check(CLI::PositiveNumber);
    bench->add_option("--expand", bo.expand, "Blocking region scale")->check(CLI::Range(1.0, 100.0));
    bench->add_option("--csv", bo.csv, "Also write the CSV here");

    AlignOptions ao;
    auto* align = app.add_subcommand("align", "Estimate frame-to-frame affines with ECC");
    align->add_option("--images", ao.images, "Directory of PGM frames")->required();
    align->add_option("--out", ao.out, "Affine file")->required();
    align->add_option("--config", ao.config, "JSON configuration (ecc section)");
    align->add_option("--downscale", ao.downscale, "Halvings before ECC")->check(CLI::Range(0, 8));

    GenerateOptions go;
    auto* generate = app.add_subcommand("generate", "Write a synthetic scene");
    generate->add_option("--spec", go.spec, "Scene spec JSON")->required();
    generate->add_option("--seed", go.seed, "Override the spec seed");
    generate->add_option("--out", go.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*track) return run_track(to);
        if (*eval) return run_eval(eo);
        if (*bench) return run_bench(bo);
        if (*align) return run_align(ao);
        if (*generate) return run_generate(go);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
