#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "linetrack/image.hpp"
#include "linetrack/object.hpp"
#include "linetrack/observation.hpp"
#include "linetrack/tracker.hpp"

namespace linetrack {

struct EngineParams {
    ExtractionParams extraction;
    TrackerKind tracker_kind = TrackerKind::Kalman;
    TrackerParams tracker;
    double match_distance = 5.0;  ///< max |obs.position - prediction.position| for a candidate
    double gap_relative = 0.5;    ///< fraction of the object's span count tolerated as gap
    int gap_absolute = 10;        ///< hard cap on tolerated gap, in scenes
    int min_length = 10;          ///< scan: minimum span count; postprocess: minimum length in px
    double overlap_threshold = 0.5;  ///< deduplication footprint-overlap ratio
    std::optional<double> thickness_min, thickness_max;  ///< optional attribute filters
    std::optional<double> angle_min, angle_max;          ///< degrees, in (-90, 90]

    void validate() const {
        extraction.validate();
        tracker.validate();
        if (match_distance <= 0) throw ConfigError("match_distance must be > 0");
        if (gap_relative < 0 || gap_relative > 1) throw ConfigError("gap_relative must be in [0, 1]");
        if (gap_absolute < 0) throw ConfigError("gap_absolute must be >= 0");
        if (min_length < 0) throw ConfigError("min_length must be >= 0");
        if (overlap_threshold <= 0 || overlap_threshold > 1)
            throw ConfigError("overlap_threshold must be in (0, 1]");
        if (thickness_min && thickness_max && *thickness_min > *thickness_max)
            throw ConfigError("thickness range is reversed");
        if (angle_min && angle_max && *angle_min > *angle_max)
            throw ConfigError("angle range is reversed");
    }
};

struct MatchResult {
    /// Per tracker, the index of the observation it matched, if any.
    std::vector<std::optional<std::size_t>> assignment;
    /// Observations claimed by no tracker, in ascending index order.
    std::vector<std::size_t> unmatched;
};

/// Matches the scene's observations against the trackers' predictions.
///
/// A candidate must lie within match_distance of the predicted position and
/// pass the 3-sigma compatibility gates on implied slope, thickness and
/// luminance. Each tracker takes the candidate closest in position (ties to
/// the lower index). Several trackers may claim the same observation — that
/// is what carries objects through crossings.
inline MatchResult match_observations(const std::vector<Tracker>& trackers,
                                      const std::vector<Prediction>& predictions,
                                      const std::vector<Observation>& observations,
                                      const EngineParams& params) {
    MatchResult result;
    result.assignment.assign(trackers.size(), std::nullopt);
    std::vector<bool> claimed(observations.size(), false);

    for (std::size_t ti = 0; ti < trackers.size(); ++ti) {
        const Tracker& tracker = trackers[ti];
        const Prediction& pred = predictions[ti];
        const AttributeSigmas sig = tracker.attribute_sigmas();
        const double slope_est = tracker.slope_estimate();

        double best_dist = std::numeric_limits<double>::infinity();
        std::optional<std::size_t> best;
        for (std::size_t oi = 0; oi < observations.size(); ++oi) {
            const Observation& obs = observations[oi];
            const double dist = std::abs(obs.position - pred.position);
            if (dist > params.match_distance) continue;
            const double dt = double(obs.scene - tracker.last_matched_scene());
            const double implied_slope = (obs.position - tracker.last_position()) / dt;
            if (std::abs(implied_slope - slope_est) >= 3.0 * sig.slope) continue;
            if (std::abs(obs.thickness - pred.thickness) >= 3.0 * sig.thickness) continue;
            if (std::abs(obs.luminance - pred.luminance) >= 3.0 * sig.luminance) continue;
            if (dist < best_dist) {
                best_dist = dist;
                best = oi;
            }
        }
        result.assignment[ti] = best;
        if (best) claimed[*best] = true;
    }
    for (std::size_t oi = 0; oi < observations.size(); ++oi)
        if (!claimed[oi]) result.unmatched.push_back(oi);
    return result;
}

namespace detail {

inline void finish_tracker(std::vector<LinearObject>& out, Tracker&& tracker, ScanAxis axis,
                           int min_length, int& next_id) {
    if (static_cast<int>(tracker.spans().size()) < std::max(min_length, 1)) return;
    out.push_back(LinearObject{next_id++, axis, std::move(tracker).take_spans()});
}

}  // namespace detail

/// Core single-direction scan over abstract scene profiles.
///
/// `profile_of(t)` must return the luminance profile of scene t as a
/// contiguous span; it is called exactly once per scene. Per scene the engine
/// extracts observations, predicts every active tracker, matches, integrates,
/// spawns trackers from unmatched observations and retires trackers whose
/// gap exceeds min(gap_relative * span_count, gap_absolute). Trailing
/// unmatched scenes are not part of the emitted objects.
template <typename ProfileFn>
std::vector<LinearObject> scan_profiles(int scene_count, ProfileFn&& profile_of,
                                        const EngineParams& params, ScanAxis axis) {
    std::vector<LinearObject> out;
    std::vector<Tracker> pool;
    std::vector<Prediction> predictions;
    int next_id = 0;

    for (int t = 0; t < scene_count; ++t) {
        const std::vector<Observation> observations =
            extract_observations(profile_of(t), t, params.extraction);

        predictions.clear();
        predictions.reserve(pool.size());
        for (const Tracker& tracker : pool) predictions.push_back(tracker.predict(t));

        const MatchResult matches = match_observations(pool, predictions, observations, params);

        for (std::size_t ti = 0; ti < pool.size(); ++ti)
            if (matches.assignment[ti]) pool[ti].integrate(observations[*matches.assignment[ti]], t);

        for (std::size_t oi : matches.unmatched)
            pool.emplace_back(params.tracker_kind, params.tracker, observations[oi]);

        // retire lost trackers
        for (std::size_t ti = 0; ti < pool.size();) {
            const int gap = t - pool[ti].last_matched_scene();
            const double allowance =
                std::min(params.gap_relative * double(pool[ti].spans().size()),
                         double(params.gap_absolute));
            if (double(gap) > allowance) {
                detail::finish_tracker(out, std::move(pool[ti]), axis, params.min_length, next_id);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(ti));
            } else {
                ++ti;
            }
        }
    }
    for (Tracker& tracker : pool)
        detail::finish_tracker(out, std::move(tracker), axis, params.min_length, next_id);
    return out;
}

/// Runs one directional scan over the image. The vertical scan is the same
/// process on the transposed raster; span coordinates stay in scan space and
/// are mapped back to image space by the object accessors.
inline std::vector<LinearObject> scan(const GrayImage& img, const EngineParams& params,
                                      ScanAxis axis) {
    if (axis == ScanAxis::Horizontal) {
        // columns of the image are rows of its transpose
        const GrayImage t = transpose(img);
        return scan_profiles(img.width, [&](int scene) { return t.row(scene); }, params, axis);
    }
    return scan_profiles(img.height, [&](int scene) { return img.row(scene); }, params, axis);
}

}  // namespace linetrack
