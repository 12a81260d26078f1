// Command-line surface of the linear object detector: detection, synthetic
// fixture generation, vector/instance evaluation and overlay rendering.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linetrack/linetrack.hpp"

namespace fs = std::filesystem;
using namespace linetrack;

namespace {

// Exit code contract: 0 success, 2 I/O or format, 3 configuration or usage,
// 4 evaluation-domain errors.
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;
constexpr int kExitEval = 4;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEval;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

struct CommonOpts {
    std::string config_path;
    std::string tracker;
    std::vector<std::string> overrides;

    Config build() const {
        Config cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        if (!tracker.empty()) cfg.set("tracker", tracker);
        apply_overrides(cfg, overrides);
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_tracker = true) {
    cmd->add_option("--config", opts.config_path, "flat key=value configuration file");
    if (with_tracker)
        cmd->add_option("--tracker", opts.tracker,
                        "tracker variant: last-obs, sma, ema, double-exp, one-euro, kalman");
    cmd->add_option("--set", opts.overrides, "override a configuration key, e.g. --set l_mm=100")
        ->type_size(1);
}

// ---------------------------------------------------------------------------

int run_detect(const std::string& input, const std::string& out_dir, const CommonOpts& opts) {
    const Config cfg = opts.build();
    GrayImage img = load_gray(input);
    if (cfg.top_hat_radius > 0) img = black_top_hat(img, cfg.top_hat_radius);

    const auto t0 = std::chrono::steady_clock::now();
    const DetectionResult result = detect(img, cfg.engine);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out_dir);
    save_json_file((fs::path(out_dir) / "segments.json").string(),
                   segments_to_json(result.segments, &result.objects));
    std::vector<ScanAxis> axes;
    for (const LinearObject& obj : result.objects) axes.push_back(obj.axis);
    save_masks_dir((fs::path(out_dir) / "masks").string(), result.masks, &result.segments, &axes);

    json manifest;
    manifest["input"] = input;
    manifest["tracker"] = tracker_kind_name(cfg.engine.tracker_kind);
    manifest["parameters"] = cfg.to_json();
    manifest["object_count"] = result.objects.size();
    manifest["wall_time_ms"] = ms;
    save_json_file((fs::path(out_dir) / "run.json").string(), manifest);

    std::cout << result.objects.size() << " objects -> " << out_dir << " (" << std::lround(ms)
              << " ms)\n";
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<std::string> sorted_json_files(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

int run_eval_vector(const std::string& pred_path, const std::string& gt_path,
                    const CommonOpts& opts) {
    const Config cfg = opts.build();
    if (fs::is_directory(pred_path) && fs::is_directory(gt_path)) {
        std::vector<json> rows;
        for (const std::string& name : sorted_json_files(pred_path)) {
            const fs::path gt_file = fs::path(gt_path) / name;
            if (!fs::exists(gt_file)) throw IoError("no ground truth for " + name);
            const auto pred = segments_from_json(load_json_file((fs::path(pred_path) / name).string()));
            const auto gt = segments_from_json(load_json_file(gt_file.string()));
            json row = vector_scores_to_json(vector_scores(pred, gt, cfg.eval));
            row["file"] = name;
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw EvalError("no prediction files found in " + pred_path);
        json report;
        report["rows"] = rows;
        report["summary"] =
            summarize_rows(rows, {"precision", "recall", "precision2", "fscore", "fscore2"});
        std::cout << report.dump(2) << "\n";
        return 0;
    }
    const auto pred = segments_from_json(load_json_file(pred_path));
    const auto gt = segments_from_json(load_json_file(gt_path));
    std::cout << vector_scores_to_json(vector_scores(pred, gt, cfg.eval)).dump(2) << "\n";
    return 0;
}

int run_eval_instance(const std::string& pred_dir, const std::string& gt_dir) {
    const bool single = fs::exists(fs::path(pred_dir) / "index.json");
    if (single) {
        const LabelMasks pred = load_masks_dir(pred_dir);
        const LabelMasks gt = load_masks_dir(gt_dir);
        std::cout << instance_scores_to_json(coco_pq(pred, gt), binary_pixel_fscore(pred, gt)).dump(2)
                  << "\n";
        return 0;
    }
    // batch: directories of per-image mask directories, paired by name
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "index.json"))
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("no mask directories (index.json) under " + pred_dir);
    std::vector<json> rows;
    for (const std::string& name : names) {
        const fs::path gt_sub = fs::path(gt_dir) / name;
        if (!fs::exists(gt_sub / "index.json")) throw IoError("no ground-truth masks for " + name);
        const LabelMasks pred = load_masks_dir((fs::path(pred_dir) / name).string());
        const LabelMasks gt = load_masks_dir(gt_sub.string());
        json row = instance_scores_to_json(coco_pq(pred, gt), binary_pixel_fscore(pred, gt));
        row["image"] = name;
        rows.push_back(std::move(row));
    }
    json report;
    report["rows"] = rows;
    report["summary"] = summarize_rows(rows, {"pq", "mean_iou", "binary_fscore"});
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int run_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed) {
    SynthSpec spec;
    try {
        spec = synth_spec_from_json(load_json_file(spec_path));
        spec.validate();
    } catch (const FormatError& e) {
        throw ConfigError(e.what());  // an invalid spec is a configuration error
    }
    const SynthResult result = render_synthetic(spec, seed);

    fs::create_directories(out_dir);
    save_pgm((fs::path(out_dir) / "image.pgm").string(), result.image);
    save_json_file((fs::path(out_dir) / "segments.json").string(),
                   segments_to_json(result.segments));
    std::vector<ScanAxis> axes;
    for (const Segment& s : result.segments)
        axes.push_back(std::abs(s.x1 - s.x0) >= std::abs(s.y1 - s.y0) ? ScanAxis::Horizontal
                                                                      : ScanAxis::Vertical);
    save_masks_dir((fs::path(out_dir) / "masks").string(), result.masks, &result.segments, &axes);
    std::cout << result.segments.size() << " segments -> " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb id_color(int id) {
    // golden-ratio hue rotation; saturated so tinted pixels never stay gray
    const double hue = std::fmod(id * 0.61803398875, 1.0) * 6.0;
    const double s = 0.85, v = 1.0;
    const int i = int(hue);
    const double f = hue - i;
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double r = 0, g = 0, b = 0;
    switch (i % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        case 5: r = v; g = p; b = q; break;
    }
    return {std::uint8_t(r * 255), std::uint8_t(g * 255), std::uint8_t(b * 255)};
}

int run_overlay(const std::string& image_path, const std::string& segments_path,
                const std::string& masks_dir, const std::string& out_path) {
    const GrayImage img = load_gray(image_path);
    std::vector<std::uint8_t> rgb(img.data.size() * 3);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = img.data[i];

    auto tint = [&](std::size_t key, Rgb c) {
        const std::uint8_t gray = img.data[key];
        rgb[3 * key] = std::uint8_t((gray + c.r) / 2);
        rgb[3 * key + 1] = std::uint8_t((gray + c.g) / 2);
        rgb[3 * key + 2] = std::uint8_t((gray + c.b) / 2);
    };

    if (!masks_dir.empty()) {
        const LabelMasks masks = load_masks_dir(masks_dir);
        if (masks.width != img.width || masks.height != img.height)
            throw FormatError("mask raster size differs from the image");
        for (std::size_t k = 0; k < masks.masks.size(); ++k) {
            const Rgb c = id_color(masks.ids[k]);
            for (std::uint64_t key : masks.masks[k]) tint(key, c);
        }
    }
    if (!segments_path.empty()) {
        for (const Segment& s : segments_from_json(load_json_file(segments_path))) {
            const Rgb c = id_color(s.id);
            const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
            const int steps = int(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
            for (int i = 0; i <= steps; ++i) {
                const double f = steps > 0 ? double(i) / steps : 0.0;
                const int x = int(std::lround(s.x0 + f * dx));
                const int y = int(std::lround(s.y0 + f * dy));
                if (x < 0 || x >= img.width || y < 0 || y >= img.height) continue;
                const std::size_t key = std::size_t(y) * img.width + x;
                rgb[3 * key] = c.r;
                rgb[3 * key + 1] = c.g;
                rgb[3 * key + 2] = c.b;
            }
        }
    }
    save_png_rgb(out_path, img.width, img.height, rgb);
    std::cout << "overlay -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear object detection in document images via two-scan span tracking"};
    app.require_subcommand(1);

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "detect linear objects in a grayscale image");
    std::string detect_input, detect_out;
    CommonOpts detect_opts;
    detect_cmd->add_option("input", detect_input, "input image (PGM P5 or 8-bit grayscale PNG)")
        ->required();
    detect_cmd->add_option("--out", detect_out, "output directory")->required();
    add_common(detect_cmd, detect_opts);

    // eval-vector
    auto* evalv_cmd = app.add_subcommand("eval-vector", "score predicted segments against ground truth");
    std::string evalv_pred, evalv_gt;
    CommonOpts evalv_opts;
    evalv_cmd->add_option("predictions", evalv_pred, "predicted segments.json (or directory)")
        ->required();
    evalv_cmd->add_option("ground-truth", evalv_gt, "target segments.json (or directory)")->required();
    add_common(evalv_cmd, evalv_opts, /*with_tracker=*/false);

    // eval-instance
    auto* evali_cmd =
        app.add_subcommand("eval-instance", "score instance masks (COCO PQ + binary pixel F-score)");
    std::string evali_pred, evali_gt;
    evali_cmd->add_option("predictions", evali_pred, "predicted mask directory")->required();
    evali_cmd->add_option("ground-truth", evali_gt, "ground-truth mask directory")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "render a synthetic fixture with exact ground truth");
    std::string synth_spec, synth_out;
    std::uint64_t synth_seed = 0;
    synth_cmd->add_option("spec", synth_spec, "synthetic spec JSON")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "noise seed (identical seeds give identical bytes)");

    // overlay
    auto* overlay_cmd = app.add_subcommand("overlay", "render detections tinted over the input image");
    std::string ov_image, ov_segments, ov_masks, ov_out;
    overlay_cmd->add_option("image", ov_image, "grayscale input image")->required();
    overlay_cmd->add_option("--segments", ov_segments, "segments.json to draw");
    overlay_cmd->add_option("--masks", ov_masks, "mask directory to tint");
    overlay_cmd->add_option("--out", ov_out, "output PNG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (detect_cmd->parsed())
        return guarded([&] { return run_detect(detect_input, detect_out, detect_opts); });
    if (evalv_cmd->parsed())
        return guarded([&] { return run_eval_vector(evalv_pred, evalv_gt, evalv_opts); });
    if (evali_cmd->parsed())
        return guarded([&] { return run_eval_instance(evali_pred, evali_gt); });
    if (synth_cmd->parsed())
        return guarded([&] { return run_synth(synth_spec, synth_out, synth_seed); });
    if (overlay_cmd->parsed()) {
        if (ov_segments.empty() && ov_masks.empty()) {
            std::cerr << "error: overlay needs --segments and/or --masks\n";
            return kExitConfig;
        }
        return guarded([&] { return run_overlay(ov_image, ov_segments, ov_masks, ov_out); });
    }
    return kExitConfig;
}
