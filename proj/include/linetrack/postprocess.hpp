#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <vector>

#include "linetrack/engine.hpp"
#include "linetrack/image.hpp"
#include "linetrack/object.hpp"

namespace linetrack {

/// Vector form of a detection: the chord between the first and last span.
struct Segment {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int id = 0;

    double length() const { return std::hypot(x1 - x0, y1 - y0); }
    double angle_deg() const {
        double deg = std::atan2(y1 - y0, x1 - x0) * 180.0 / 3.14159265358979323846;
        if (deg > 90.0) deg -= 180.0;
        if (deg <= -90.0) deg += 180.0;
        return deg;
    }
};

struct DetectionResult {
    std::vector<LinearObject> objects;
    std::vector<Segment> segments;  // one per object, ids aligned
    LabelMasks masks;               // one per object, ids aligned
};

/// Removes double detections of near-diagonal objects. Every cross-axis pair
/// is tested; when the footprint overlap exceeds the threshold (relative to
/// the smaller footprint) the object with fewer pixels is discarded. Ties
/// fall back to span count, then to discarding the vertical object; footprint
/// ties are the normal case for a clean solid line seen fully by both scans,
/// and the span-count rule keeps the same physical detection when the image
/// is transposed. Idempotent; ids of survivors are preserved.
inline std::vector<LinearObject> deduplicate(std::vector<LinearObject> objects,
                                             double overlap_threshold, int width, int height) {
    const std::size_t n = objects.size();
    std::vector<std::vector<std::uint64_t>> prints(n);
    for (std::size_t i = 0; i < n; ++i) prints[i] = footprint(objects[i], width, height);

    std::vector<bool> alive(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!alive[i]) break;
            if (!alive[j] || objects[i].axis == objects[j].axis) continue;
            const auto& a = prints[i];
            const auto& b = prints[j];
            if (a.empty() || b.empty()) continue;
            std::size_t inter = 0;
            for (std::size_t ia = 0, ib = 0; ia < a.size() && ib < b.size();) {
                if (a[ia] < b[ib]) ++ia;
                else if (b[ib] < a[ia]) ++ib;
                else { ++inter; ++ia; ++ib; }
            }
            const double ratio = double(inter) / double(std::min(a.size(), b.size()));
            if (ratio > overlap_threshold) {
                if (a.size() != b.size()) {
                    alive[a.size() > b.size() ? j : i] = false;
                } else if (objects[i].spans.size() != objects[j].spans.size()) {
                    alive[objects[i].spans.size() > objects[j].spans.size() ? j : i] = false;
                } else {
                    alive[objects[i].axis == ScanAxis::Vertical ? i : j] = false;
                }
            }
        }
    }
    std::vector<LinearObject> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) kept.push_back(std::move(objects[i]));
    return kept;
}

/// Keeps objects whose endpoint length, median span thickness and endpoint
/// angle fall inside all supplied ranges. Absent bounds impose nothing.
inline std::vector<LinearObject> filter_attributes(std::vector<LinearObject> objects,
                                                   std::optional<double> min_length,
                                                   std::optional<double> thickness_min = {},
                                                   std::optional<double> thickness_max = {},
                                                   std::optional<double> angle_min = {},
                                                   std::optional<double> angle_max = {}) {
    std::vector<LinearObject> kept;
    kept.reserve(objects.size());
    for (LinearObject& obj : objects) {
        if (min_length && obj.length() < *min_length) continue;
        if (thickness_min || thickness_max) {
            const double t = obj.median_thickness();
            if (thickness_min && t < *thickness_min) continue;
            if (thickness_max && t > *thickness_max) continue;
        }
        if (angle_min || angle_max) {
            const double a = obj.angle_deg();
            if (angle_min && a < *angle_min) continue;
            if (angle_max && a > *angle_max) continue;
        }
        kept.push_back(std::move(obj));
    }
    return kept;
}

inline std::vector<Segment> to_segments(const std::vector<LinearObject>& objects) {
    std::vector<Segment> segments;
    segments.reserve(objects.size());
    for (const LinearObject& obj : objects) {
        const ImagePoint a = obj.front(), b = obj.back();
        segments.push_back(Segment{a.x, a.y, b.x, b.y, obj.id});
    }
    return segments;
}

inline LabelMasks to_masks(const std::vector<LinearObject>& objects, int width, int height) {
    LabelMasks masks;
    masks.width = width;
    masks.height = height;
    masks.masks.reserve(objects.size());
    masks.ids.reserve(objects.size());
    for (const LinearObject& obj : objects) {
        masks.masks.push_back(footprint(obj, width, height));
        masks.ids.push_back(obj.id);
    }
    return masks;
}

/// Full two-scan detection: horizontal and vertical scans (run in parallel),
/// deduplication, attribute filtering, then vector and mask outputs.
inline DetectionResult detect(const GrayImage& img, const EngineParams& params) {
    params.validate();
    auto vertical = std::async(std::launch::async,
                               [&] { return scan(img, params, ScanAxis::Vertical); });
    std::vector<LinearObject> objects = scan(img, params, ScanAxis::Horizontal);
    std::vector<LinearObject> v = vertical.get();
    const int base = static_cast<int>(objects.size());
    for (LinearObject& obj : v) {
        obj.id += base;
        objects.push_back(std::move(obj));
    }

    objects = deduplicate(std::move(objects), params.overlap_threshold, img.width, img.height);
    objects = filter_attributes(std::move(objects),
                                params.min_length > 0 ? std::optional<double>(params.min_length)
                                                      : std::nullopt,
                                params.thickness_min, params.thickness_max, params.angle_min,
                                params.angle_max);

    DetectionResult result;
    result.segments = to_segments(objects);
    result.masks = to_masks(objects, img.width, img.height);
    result.objects = std::move(objects);
    return result;
}

}  // namespace linetrack
