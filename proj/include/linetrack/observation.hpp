#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "linetrack/error.hpp"

namespace linetrack {

/// One dark span found in a 1-D scene (an image column or row).
struct Observation {
    int scene = 0;           ///< column (horizontal scan) or row (vertical scan) index
    double position = 0.0;   ///< midpoint of the span along the scene, sub-pixel
    double thickness = 1.0;  ///< span length in pixels
    double luminance = 0.0;  ///< mean luminance over the span, 0..255
};

struct ExtractionParams {
    int l_mm = 128;              ///< admission threshold: a span pixel must not exceed this
    double contrast_ratio = 1.0; ///< r; 1 keeps the whole run, < 1 thins it to the darkest core
    int max_thickness = 50;      ///< spans larger than this are rejected

    void validate() const {
        if (l_mm <= 0 || l_mm > 255) throw ConfigError("l_mm must be in (0, 255]");
        if (contrast_ratio <= 0) throw ConfigError("contrast_ratio must be > 0");
        if (max_thickness < 1) throw ConfigError("max_thickness must be >= 1");
    }
};

/// Extracts the dark-span observations of one scene.
///
/// Each maximal run of pixels with value <= l_mm is located; its contrast is
/// the difference between the darker of the two pixels adjacent to the run
/// (255 when the run touches the profile boundary) and the run minimum. The
/// run is then refined to the largest sub-range around the minimum whose
/// pixels stay within run_min + r * contrast, and reported with its midpoint,
/// length and mean luminance. Spans thicker than max_thickness are dropped.
inline std::vector<Observation> extract_observations(std::span<const std::uint8_t> profile,
                                                     int scene, const ExtractionParams& params) {
    std::vector<Observation> out;
    const int n = static_cast<int>(profile.size());
    int i = 0;
    while (i < n) {
        if (profile[static_cast<std::size_t>(i)] > params.l_mm) {
            ++i;
            continue;
        }
        int begin = i;
        int run_min = 255;
        while (i < n && profile[static_cast<std::size_t>(i)] <= params.l_mm) {
            run_min = std::min(run_min, int(profile[static_cast<std::size_t>(i)]));
            ++i;
        }
        int end = i;  // run is [begin, end)

        const int left = begin > 0 ? profile[static_cast<std::size_t>(begin - 1)] : 255;
        const int right = end < n ? profile[static_cast<std::size_t>(end)] : 255;
        const int contrast = std::min(left, right) - run_min;
        if (contrast <= 0) continue;

        // Largest contiguous sub-range that contains a run-minimum pixel and
        // whose values stay within the refinement threshold.
        const double limit = run_min + params.contrast_ratio * contrast;
        int best_lo = -1, best_hi = -1;
        int lo = begin;
        while (lo < end) {
            if (double(profile[static_cast<std::size_t>(lo)]) > limit) {
                ++lo;
                continue;
            }
            int hi = lo;
            bool has_min = false;
            while (hi < end && double(profile[static_cast<std::size_t>(hi)]) <= limit) {
                has_min = has_min || profile[static_cast<std::size_t>(hi)] == run_min;
                ++hi;
            }
            if (has_min && hi - lo > best_hi - best_lo) {
                best_lo = lo;
                best_hi = hi;
            }
            lo = hi;
        }
        if (best_lo < 0) continue;

        const int len = best_hi - best_lo;
        if (len > params.max_thickness) continue;

        double sum = 0;
        for (int k = best_lo; k < best_hi; ++k) sum += profile[static_cast<std::size_t>(k)];
        out.push_back(Observation{scene, (best_lo + best_hi - 1) / 2.0, double(len), sum / len});
    }
    return out;
}

}  // namespace linetrack
