#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "linetrack/error.hpp"
#include "linetrack/image.hpp"
#include "linetrack/postprocess.hpp"

namespace linetrack {

struct VectorMatchParams {
    double min_overlap = 0.8;        ///< |L| / |P| required for a match
    double max_perp_distance = 20.0; ///< pixels, strict
    double max_angle_diff = 5.0;     ///< degrees, segments treated as undirected

    void validate() const {
        if (min_overlap <= 0 || min_overlap > 1) throw ConfigError("eval_min_overlap must be in (0, 1]");
        if (max_perp_distance <= 0) throw ConfigError("eval_max_distance must be > 0");
        if (max_angle_diff <= 0) throw ConfigError("eval_max_angle_diff must be > 0");
    }
};

struct VectorScores {
    double precision = 0, recall = 0, precision2 = 0, fscore = 0, fscore2 = 0;
    std::vector<std::pair<std::size_t, std::size_t>> assignments;  // (prediction, target)
};

/// Projection of segment p onto segment t: the 1-D interval [lo, hi] in t's
/// arc-length parameter (clipped to t's extent) plus the perpendicular
/// distance from t's midpoint to p's supporting line.
struct Projection {
    double lo = 0, hi = 0;
    double perp_distance = 0;

    double length() const { return hi - lo; }
};

inline Projection project(const Segment& p, const Segment& t) {
    const double plen = p.length(), tlen = t.length();
    if (plen <= 0 || tlen <= 0) throw EvalError("degenerate zero-length segment");
    const double ux = (t.x1 - t.x0) / tlen, uy = (t.y1 - t.y0) / tlen;
    const double a = (p.x0 - t.x0) * ux + (p.y0 - t.y0) * uy;
    const double b = (p.x1 - t.x0) * ux + (p.y1 - t.y0) * uy;
    Projection proj;
    proj.lo = std::clamp(std::min(a, b), 0.0, tlen);
    proj.hi = std::clamp(std::max(a, b), 0.0, tlen);
    const double mx = (t.x0 + t.x1) / 2 - p.x0, my = (t.y0 + t.y1) / 2 - p.y0;
    proj.perp_distance = std::abs((p.x1 - p.x0) * my - (p.y1 - p.y0) * mx) / plen;
    return proj;
}

inline double angle_difference_deg(const Segment& a, const Segment& b) {
    double d = std::abs(a.angle_deg() - b.angle_deg());
    return std::min(d, 180.0 - d);
}

/// Matches predictions to targets. A prediction matches a target when the
/// projected overlap covers at least min_overlap of the prediction, the
/// perpendicular distance stays under max_perp_distance and the orientations
/// agree within max_angle_diff. Each prediction is assigned the matching
/// target with the smallest perpendicular distance (ties to the lower target
/// index); a target may be claimed by many predictions.
inline std::vector<std::pair<std::size_t, std::size_t>> match_vector(
    const std::vector<Segment>& predictions, const std::vector<Segment>& targets,
    const VectorMatchParams& params) {
    std::vector<std::pair<std::size_t, std::size_t>> assignments;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double best_d = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        bool found = false;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            const Projection proj = project(predictions[i], targets[j]);
            if (proj.length() / predictions[i].length() < params.min_overlap) continue;
            if (proj.perp_distance >= params.max_perp_distance) continue;
            if (angle_difference_deg(predictions[i], targets[j]) > params.max_angle_diff) continue;
            if (proj.perp_distance < best_d) {
                best_d = proj.perp_distance;
                best_j = j;
                found = true;
            }
        }
        if (found) assignments.emplace_back(i, best_j);
    }
    return assignments;
}

namespace detail {

inline double interval_union_length(std::vector<std::pair<double, double>>& iv) {
    std::sort(iv.begin(), iv.end());
    double total = 0, hi = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : iv) {
        if (a > hi) {
            total += b - a;
            hi = b;
        } else if (b > hi) {
            total += b - hi;
            hi = b;
        }
    }
    return total;
}

inline double harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace detail

/// Vectorization scores. Precision accumulates matched projection lengths
/// over the total predicted length; recall accumulates per-target projection
/// unions over the total target length; precision2 additionally divides each
/// projection by its target's fragment count, penalizing fragmentation.
inline VectorScores vector_scores(const std::vector<Segment>& predictions,
                                  const std::vector<Segment>& targets,
                                  const VectorMatchParams& params) {
    if (targets.empty()) throw EvalError("no targets: recall is undefined");
    VectorScores scores;
    if (predictions.empty()) {
        scores.precision = scores.precision2 = 1.0;  // vacuously precise
        return scores;
    }
    scores.assignments = match_vector(predictions, targets, params);

    double sum_pred = 0;
    for (const Segment& p : predictions) sum_pred += p.length();
    double sum_target = 0;
    for (const Segment& t : targets) sum_target += t.length();

    std::vector<std::size_t> fragments(targets.size(), 0);
    for (const auto& [i, j] : scores.assignments) ++fragments[j];

    double covered = 0, covered2 = 0;
    std::vector<std::vector<std::pair<double, double>>> per_target(targets.size());
    for (const auto& [i, j] : scores.assignments) {
        const Projection proj = project(predictions[i], targets[j]);
        covered += proj.length();
        covered2 += proj.length() / double(fragments[j]);
        per_target[j].push_back({proj.lo, proj.hi});
    }
    double union_total = 0;
    for (auto& iv : per_target) union_total += detail::interval_union_length(iv);

    scores.precision = covered / sum_pred;
    scores.precision2 = covered2 / sum_pred;
    scores.recall = union_total / sum_target;
    scores.fscore = detail::harmonic(scores.precision, scores.recall);
    scores.fscore2 = detail::harmonic(scores.precision2, scores.recall);
    return scores;
}

struct PqResult {
    double pq = 0;
    int tp = 0, fp = 0, fn = 0;
    double mean_iou = 0;
};

namespace detail {

inline std::size_t sorted_intersection_size(const std::vector<std::uint64_t>& a,
                                            const std::vector<std::uint64_t>& b) {
    std::size_t n = 0;
    for (std::size_t ia = 0, ib = 0; ia < a.size() && ib < b.size();) {
        if (a[ia] < b[ib]) ++ia;
        else if (b[ib] < a[ia]) ++ib;
        else { ++n; ++ia; ++ib; }
    }
    return n;
}

}  // namespace detail

/// COCO panoptic quality over instance masks. Pairs with IoU > 0.5 (such a
/// pairing is unique per mask); pq = sum of paired IoU / (TP + FP/2 + FN/2).
/// Background is not a category.
inline PqResult coco_pq(const LabelMasks& pred, const LabelMasks& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw EvalError("mask raster dimensions differ");
    PqResult r;
    std::vector<bool> gt_used(gt.masks.size(), false);
    double iou_sum = 0;
    for (const auto& p : pred.masks) {
        double best_iou = 0.5;  // pairing requires IoU strictly above 0.5
        std::size_t best_j = 0;
        bool paired = false;
        for (std::size_t j = 0; j < gt.masks.size(); ++j) {
            if (gt_used[j]) continue;
            const std::size_t inter = detail::sorted_intersection_size(p, gt.masks[j]);
            if (inter == 0) continue;
            const double uni = double(p.size() + gt.masks[j].size() - inter);
            const double iou = double(inter) / uni;
            if (iou > best_iou) {
                best_iou = iou;
                best_j = j;
                paired = true;
            }
        }
        if (paired) {
            gt_used[best_j] = true;
            iou_sum += best_iou;
            ++r.tp;
        } else {
            ++r.fp;
        }
    }
    for (bool used : gt_used)
        if (!used) ++r.fn;
    const double denom = r.tp + 0.5 * r.fp + 0.5 * r.fn;
    r.pq = denom > 0 ? iou_sum / denom : 1.0;
    r.mean_iou = r.tp > 0 ? iou_sum / r.tp : 0.0;
    return r;
}

struct BinaryScores {
    double precision = 0, recall = 0, fscore = 0;
};

/// Flattens both mask sets to binary foreground and scores them as a pixel
/// classification problem.
inline BinaryScores binary_pixel_fscore(const LabelMasks& pred, const LabelMasks& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw EvalError("mask raster dimensions differ");
    auto flatten = [](const LabelMasks& m) {
        std::vector<std::uint64_t> all;
        for (const auto& mask : m.masks) all.insert(all.end(), mask.begin(), mask.end());
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        return all;
    };
    const auto p = flatten(pred);
    const auto g = flatten(gt);
    const std::size_t inter = detail::sorted_intersection_size(p, g);
    BinaryScores s;
    s.precision = p.empty() ? 1.0 : double(inter) / double(p.size());
    s.recall = g.empty() ? 1.0 : double(inter) / double(g.size());
    s.fscore = detail::harmonic(s.precision, s.recall);
    return s;
}

}  // namespace linetrack
