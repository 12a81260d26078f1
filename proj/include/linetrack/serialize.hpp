#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "linetrack/engine.hpp"
#include "linetrack/error.hpp"
#include "linetrack/evaluate.hpp"
#include "linetrack/image_io.hpp"
#include "linetrack/postprocess.hpp"
#include "linetrack/synthetic.hpp"

namespace linetrack {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// segments.json
// ---------------------------------------------------------------------------

inline json segments_to_json(const std::vector<Segment>& segments,
                             const std::vector<LinearObject>* objects = nullptr) {
    json arr = json::array();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& s = segments[i];
        json item = {{"id", s.id},       {"x0", s.x0},
                     {"y0", s.y0},       {"x1", s.x1},
                     {"y1", s.y1},       {"length", s.length()},
                     {"angle_deg", s.angle_deg()}};
        if (objects) {
            double mean = 0;
            for (const Observation& o : (*objects)[i].spans) mean += o.thickness;
            item["mean_thickness"] = mean / double((*objects)[i].spans.size());
        }
        arr.push_back(std::move(item));
    }
    return arr;
}

/// Accepts both the full detector output and the bare ground-truth format
/// (objects with at least x0, y0, x1, y1).
inline std::vector<Segment> segments_from_json(const json& arr) {
    if (!arr.is_array()) throw FormatError("segments: expected a JSON array");
    std::vector<Segment> out;
    int fallback_id = 0;
    for (const json& item : arr) {
        for (const char* key : {"x0", "y0", "x1", "y1"})
            if (!item.contains(key) || !item[key].is_number())
                throw FormatError(std::string("segments: entry missing numeric '") + key + "'");
        Segment s;
        s.x0 = item["x0"].get<double>();
        s.y0 = item["y0"].get<double>();
        s.x1 = item["x1"].get<double>();
        s.y1 = item["y1"].get<double>();
        s.id = item.value("id", fallback_id);
        ++fallback_id;
        out.push_back(s);
    }
    return out;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw FormatError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// mask directory: masks/obj_<id>.pgm + masks/index.json
// ---------------------------------------------------------------------------

inline void save_masks_dir(const std::string& dir, const LabelMasks& masks,
                           const std::vector<Segment>* segments = nullptr,
                           const std::vector<ScanAxis>* axes = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json index;
    index["width"] = masks.width;
    index["height"] = masks.height;
    index["objects"] = json::array();
    for (std::size_t k = 0; k < masks.masks.size(); ++k) {
        const int id = masks.ids.empty() ? int(k) : masks.ids[k];
        const std::string file = "obj_" + std::to_string(id) + ".pgm";
        GrayImage m(masks.width, masks.height, 0);
        for (std::uint64_t key : masks.masks[k]) m.data[key] = 255;
        save_pgm((fs::path(dir) / file).string(), m);
        json entry = {{"id", id}, {"file", file}};
        if (axes && k < axes->size()) entry["axis"] = scan_axis_name((*axes)[k]);
        if (segments && k < segments->size()) {
            const Segment& s = (*segments)[k];
            entry["x0"] = s.x0;
            entry["y0"] = s.y0;
            entry["x1"] = s.x1;
            entry["y1"] = s.y1;
        }
        index["objects"].push_back(std::move(entry));
    }
    save_json_file((fs::path(dir) / "index.json").string(), index);
}

inline LabelMasks load_masks_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const json index = load_json_file((fs::path(dir) / "index.json").string());
    for (const char* key : {"width", "height", "objects"})
        if (!index.contains(key)) throw FormatError("mask index: missing '" + std::string(key) + "'");
    LabelMasks masks;
    masks.width = index["width"].get<int>();
    masks.height = index["height"].get<int>();
    for (const json& entry : index["objects"]) {
        const GrayImage m = load_pgm((fs::path(dir) / entry["file"].get<std::string>()).string());
        if (m.width != masks.width || m.height != masks.height)
            throw FormatError("mask index: raster size of " + entry["file"].get<std::string>() +
                              " differs from index");
        std::vector<std::uint64_t> pixels;
        for (std::size_t i = 0; i < m.data.size(); ++i)
            if (m.data[i] >= 128) pixels.push_back(i);
        masks.masks.push_back(std::move(pixels));
        masks.ids.push_back(entry.value("id", int(masks.ids.size())));
    }
    return masks;
}

// ---------------------------------------------------------------------------
// synthetic spec
// ---------------------------------------------------------------------------

inline SynthSpec synth_spec_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("synth spec: expected a JSON object");
    SynthSpec spec;
    if (!j.contains("width") || !j.contains("height"))
        throw FormatError("synth spec: missing 'width'/'height'");
    spec.width = j["width"].get<int>();
    spec.height = j["height"].get<int>();
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.background = j.value("background", 255);
    for (const json& s : j.value("segments", json::array())) {
        SynthSegment seg;
        for (const char* key : {"x0", "y0", "x1", "y1"})
            if (!s.contains(key)) throw FormatError("synth spec: segment missing '" + std::string(key) + "'");
        seg.x0 = s["x0"].get<double>();
        seg.y0 = s["y0"].get<double>();
        seg.x1 = s["x1"].get<double>();
        seg.y1 = s["y1"].get<double>();
        seg.thickness = s.value("thickness", 1.0);
        seg.luminance = s.value("luminance", 0);
        seg.dash_on = s.value("dash_on", 0.0);
        seg.dash_off = s.value("dash_off", 0.0);
        spec.segments.push_back(seg);
    }
    return spec;
}

// ---------------------------------------------------------------------------
// flat key=value configuration
// ---------------------------------------------------------------------------

/// The full tuning surface: engine, extraction, tracker, postprocess and
/// evaluation parameters as flat keys. Unknown keys are rejected; values are
/// validated against each module's invariants.
struct Config {
    EngineParams engine;
    VectorMatchParams eval;
    int top_hat_radius = 0;  ///< 0 disables the pre-processing

    void set(const std::string& key, const std::string& raw);
    void validate() const {
        engine.validate();
        eval.validate();
        if (top_hat_radius < 0) throw ConfigError("top_hat_radius must be >= 0");
    }
    json to_json() const;
};

namespace detail {

inline double config_num(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + raw + "'");
    }
}

}  // namespace detail

inline void Config::set(const std::string& key, const std::string& raw) {
    auto num = [&] { return detail::config_num(key, raw); };
    auto opt = [&]() -> std::optional<double> {
        if (raw == "none" || raw.empty()) return std::nullopt;
        return detail::config_num(key, raw);
    };

    if (key == "tracker") engine.tracker_kind = tracker_kind_from_name(raw);
    else if (key == "l_mm") engine.extraction.l_mm = int(num());
    else if (key == "contrast_ratio") engine.extraction.contrast_ratio = num();
    else if (key == "max_thickness") engine.extraction.max_thickness = int(num());
    else if (key == "match_distance") engine.match_distance = num();
    else if (key == "gap_relative") engine.gap_relative = num();
    else if (key == "gap_absolute") engine.gap_absolute = int(num());
    else if (key == "min_length") engine.min_length = int(num());
    else if (key == "stats_window") engine.tracker.stats_window = int(num());
    else if (key == "sigma_floor_slope") engine.tracker.sigma_floor_slope = num();
    else if (key == "sigma_floor_thickness") engine.tracker.sigma_floor_thickness = num();
    else if (key == "sigma_floor_luminance") engine.tracker.sigma_floor_luminance = num();
    else if (key == "overlap_threshold") engine.overlap_threshold = num();
    else if (key == "thickness_min") engine.thickness_min = opt();
    else if (key == "thickness_max") engine.thickness_max = opt();
    else if (key == "angle_min") engine.angle_min = opt();
    else if (key == "angle_max") engine.angle_max = opt();
    else if (key == "top_hat_radius") top_hat_radius = int(num());
    else if (key == "sma_window") engine.tracker.sma_window = int(num());
    else if (key == "ema_horizon") engine.tracker.ema_horizon = int(num());
    else if (key == "double_exp_alpha") engine.tracker.double_exp_alpha = num();
    else if (key == "one_euro_min_cutoff") engine.tracker.one_euro_min_cutoff = num();
    else if (key == "one_euro_beta") engine.tracker.one_euro_beta = num();
    else if (key == "one_euro_d_cutoff") engine.tracker.one_euro_d_cutoff = num();
    else if (key == "kalman_process_noise") engine.tracker.kalman_process_noise = num();
    else if (key == "kalman_r_position") engine.tracker.kalman_measurement_noise[0] = num();
    else if (key == "kalman_r_thickness") engine.tracker.kalman_measurement_noise[1] = num();
    else if (key == "kalman_r_luminance") engine.tracker.kalman_measurement_noise[2] = num();
    else if (key == "eval_min_overlap") eval.min_overlap = num();
    else if (key == "eval_max_distance") eval.max_perp_distance = num();
    else if (key == "eval_max_angle_diff") eval.max_angle_diff = num();
    else throw ConfigError("config: unknown key '" + key + "'");
}

inline json Config::to_json() const {
    json j;
    j["tracker"] = tracker_kind_name(engine.tracker_kind);
    j["l_mm"] = engine.extraction.l_mm;
    j["contrast_ratio"] = engine.extraction.contrast_ratio;
    j["max_thickness"] = engine.extraction.max_thickness;
    j["match_distance"] = engine.match_distance;
    j["gap_relative"] = engine.gap_relative;
    j["gap_absolute"] = engine.gap_absolute;
    j["min_length"] = engine.min_length;
    j["stats_window"] = engine.tracker.stats_window;
    j["sigma_floor_slope"] = engine.tracker.sigma_floor_slope;
    j["sigma_floor_thickness"] = engine.tracker.sigma_floor_thickness;
    j["sigma_floor_luminance"] = engine.tracker.sigma_floor_luminance;
    j["overlap_threshold"] = engine.overlap_threshold;
    j["top_hat_radius"] = top_hat_radius;
    j["sma_window"] = engine.tracker.sma_window;
    j["ema_horizon"] = engine.tracker.ema_horizon;
    j["double_exp_alpha"] = engine.tracker.double_exp_alpha;
    j["one_euro_min_cutoff"] = engine.tracker.one_euro_min_cutoff;
    j["one_euro_beta"] = engine.tracker.one_euro_beta;
    j["one_euro_d_cutoff"] = engine.tracker.one_euro_d_cutoff;
    j["kalman_process_noise"] = engine.tracker.kalman_process_noise;
    j["kalman_r_position"] = engine.tracker.kalman_measurement_noise[0];
    j["kalman_r_thickness"] = engine.tracker.kalman_measurement_noise[1];
    j["kalman_r_luminance"] = engine.tracker.kalman_measurement_noise[2];
    j["eval_min_overlap"] = eval.min_overlap;
    j["eval_max_distance"] = eval.max_perp_distance;
    j["eval_max_angle_diff"] = eval.max_angle_diff;
    auto put_opt = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put_opt("thickness_min", engine.thickness_min);
    put_opt("thickness_max", engine.thickness_max);
    put_opt("angle_min", engine.angle_min);
    put_opt("angle_max", engine.angle_max);
    return j;
}

/// Parses flat `key = value` lines. '#' and ';' start comments; blank lines
/// are ignored.
inline void parse_config_text(Config& cfg, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

inline void load_config_file(Config& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    parse_config_text(cfg, buf.str(), path);
}

/// Applies `key=value` override strings (the CLI's --set).
inline void apply_overrides(Config& cfg, const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

// ---------------------------------------------------------------------------
// score reports
// ---------------------------------------------------------------------------

inline json vector_scores_to_json(const VectorScores& s) {
    return json{{"precision", s.precision},
                {"recall", s.recall},
                {"precision2", s.precision2},
                {"fscore", s.fscore},
                {"fscore2", s.fscore2},
                {"matches", s.assignments.size()}};
}

inline json instance_scores_to_json(const PqResult& pq, const BinaryScores& bin) {
    return json{{"pq", pq.pq},
                {"tp", pq.tp},
                {"fp", pq.fp},
                {"fn", pq.fn},
                {"mean_iou", pq.mean_iou},
                {"binary_precision", bin.precision},
                {"binary_recall", bin.recall},
                {"binary_fscore", bin.fscore}};
}

/// Mean and population standard deviation of a metric column across images.
inline json summarize_rows(const std::vector<json>& rows, const std::vector<std::string>& keys) {
    json agg;
    for (const std::string& key : keys) {
        double mean = 0;
        std::size_t n = 0;
        for (const json& row : rows)
            if (row.contains(key) && row[key].is_number()) {
                mean += row[key].get<double>();
                ++n;
            }
        if (n == 0) continue;
        mean /= double(n);
        double var = 0;
        for (const json& row : rows)
            if (row.contains(key) && row[key].is_number()) {
                const double d = row[key].get<double>() - mean;
                var += d * d;
            }
        agg[key] = {{"mean", mean}, {"stddev", std::sqrt(var / double(n))}};
    }
    return agg;
}

}  // namespace linetrack
