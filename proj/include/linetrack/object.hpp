#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "linetrack/observation.hpp"

namespace linetrack {

/// Direction of the scan that produced an object. Horizontal scans read the
/// image column by column (scene = x, position = y); vertical scans row by
/// row (scene = y, position = x).
enum class ScanAxis { Horizontal, Vertical };

inline const char* scan_axis_name(ScanAxis a) {
    return a == ScanAxis::Horizontal ? "horizontal" : "vertical";
}

/// Image-space point of a span, after axis de-transposition.
struct ImagePoint {
    double x = 0.0;
    double y = 0.0;
};

inline ImagePoint span_image_point(ScanAxis axis, const Observation& span) {
    if (axis == ScanAxis::Horizontal) return {double(span.scene), span.position};
    return {span.position, double(span.scene)};
}

/// A finished detection: the ordered spans matched by one tracker.
struct LinearObject {
    int id = 0;
    ScanAxis axis = ScanAxis::Horizontal;
    std::vector<Observation> spans;  // strictly increasing scene indices

    ImagePoint front() const { return span_image_point(axis, spans.front()); }
    ImagePoint back() const { return span_image_point(axis, spans.back()); }

    double length() const {
        const ImagePoint a = front(), b = back();
        return std::hypot(b.x - a.x, b.y - a.y);
    }

    /// Endpoint angle in degrees, folded into (-90, 90]. Horizontal is 0.
    double angle_deg() const {
        const ImagePoint a = front(), b = back();
        double deg = std::atan2(b.y - a.y, b.x - a.x) * 180.0 / 3.14159265358979323846;
        if (deg > 90.0) deg -= 180.0;
        if (deg <= -90.0) deg += 180.0;
        return deg;
    }

    double median_thickness() const {
        std::vector<double> t;
        t.reserve(spans.size());
        for (const Observation& o : spans) t.push_back(o.thickness);
        auto mid = t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2);
        std::nth_element(t.begin(), mid, t.end());
        return *mid;
    }
};

/// Pixel range of one span across its scene: half-open rounding of
/// [position - thickness/2, position + thickness/2), which yields exactly
/// round(thickness) pixels for integral thickness.
struct SpanPixels {
    int lo = 0;
    int hi = 0;  // inclusive
};

inline SpanPixels span_pixel_range(const Observation& span) {
    // round half up so the rule stays half-open at negative boundaries too
    const int lo = static_cast<int>(std::floor(span.position - span.thickness / 2.0 + 0.5));
    const int hi = static_cast<int>(std::floor(span.position + span.thickness / 2.0 + 0.5)) - 1;
    return {lo, hi};
}

/// The object's pixel footprint as sorted packed keys (y * width + x),
/// clamped to the raster bounds.
inline std::vector<std::uint64_t> footprint(const LinearObject& obj, int width, int height) {
    std::vector<std::uint64_t> pixels;
    const int limit = obj.axis == ScanAxis::Horizontal ? height : width;
    for (const Observation& span : obj.spans) {
        const auto [lo, hi] = span_pixel_range(span);
        for (int p = std::max(lo, 0); p <= std::min(hi, limit - 1); ++p) {
            const int x = obj.axis == ScanAxis::Horizontal ? span.scene : p;
            const int y = obj.axis == ScanAxis::Horizontal ? p : span.scene;
            pixels.push_back(static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(width) +
                             static_cast<std::uint64_t>(x));
        }
    }
    std::sort(pixels.begin(), pixels.end());
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    return pixels;
}

}  // namespace linetrack
