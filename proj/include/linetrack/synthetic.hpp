#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "linetrack/error.hpp"
#include "linetrack/image.hpp"
#include "linetrack/postprocess.hpp"

namespace linetrack {

struct SynthSegment {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double thickness = 1.0;
    int luminance = 0;
    double dash_on = 0.0;   ///< dash length along the segment; 0 = solid
    double dash_off = 0.0;  ///< gap length; 0 = solid
};

struct SynthSpec {
    int width = 0;
    int height = 0;
    std::vector<SynthSegment> segments;
    double noise_sigma = 0.0;
    int background = 255;

    void validate() const {
        if (width < 1 || height < 1) throw ConfigError("synth: raster must be at least 1x1");
        if (background < 0 || background > 255) throw ConfigError("synth: background out of range");
        if (noise_sigma < 0) throw ConfigError("synth: noise_sigma must be >= 0");
        for (const SynthSegment& s : segments) {
            if (s.thickness < 1) throw ConfigError("synth: thickness must be >= 1");
            if (s.luminance < 0 || s.luminance > 255)
                throw ConfigError("synth: luminance out of range");
            if (s.dash_on < 0 || s.dash_off < 0) throw ConfigError("synth: dash lengths must be >= 0");
            for (double v : {s.x0, s.x1})
                if (v < 0 || v > width - 1) throw ConfigError("synth: segment endpoint outside raster");
            for (double v : {s.y0, s.y1})
                if (v < 0 || v > height - 1) throw ConfigError("synth: segment endpoint outside raster");
            if (s.x0 == s.x1 && s.y0 == s.y1) throw ConfigError("synth: degenerate segment");
        }
    }
};

struct SynthResult {
    GrayImage image;
    LabelMasks masks;             ///< ground truth, one mask per segment
    std::vector<Segment> segments;  ///< center lines as drawn
};

namespace detail {

// Pixel centers at integer coordinates. A pixel belongs to the segment when
// its perpendicular distance to the center line is at most thickness/2 and
// its projection falls within the segment body (no end caps).
inline std::vector<std::uint64_t> rasterize_segment(const SynthSegment& s, int width, int height) {
    std::vector<std::uint64_t> pixels;
    const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    const double len = std::hypot(dx, dy);
    const double ux = dx / len, uy = dy / len;
    const double half = s.thickness / 2.0;
    const double period = s.dash_on + s.dash_off;
    const bool dashed = s.dash_on > 0 && s.dash_off > 0;

    const int x_lo = std::max(0, int(std::floor(std::min(s.x0, s.x1) - half - 1)));
    const int x_hi = std::min(width - 1, int(std::ceil(std::max(s.x0, s.x1) + half + 1)));
    constexpr double kEps = 1e-12;
    constexpr double kInf = 1e18;

    for (int x = x_lo; x <= x_hi; ++x) {
        // intersect the two y-intervals: |perp| <= half and 0 <= u <= len,
        // where perp = -uy*(x-x0) + ux*(y-y0) and u = ux*(x-x0) + uy*(y-y0)
        const double rx = x - s.x0;
        double y_lo = -kInf, y_hi = kInf;
        if (std::abs(ux) > kEps) {
            const double a = s.y0 + (-half + uy * rx) / ux;
            const double b = s.y0 + (half + uy * rx) / ux;
            y_lo = std::min(a, b);
            y_hi = std::max(a, b);
        } else if (std::abs(rx) > half) {
            continue;
        }
        if (std::abs(uy) > kEps) {
            const double a = s.y0 + (0.0 - ux * rx) / uy;
            const double b = s.y0 + (len - ux * rx) / uy;
            y_lo = std::max(y_lo, std::min(a, b));
            y_hi = std::min(y_hi, std::max(a, b));
        } else if (ux * rx < 0 || ux * rx > len) {
            continue;
        }
        const int yb = std::max(0, int(std::ceil(y_lo - 1e-9)));
        const int ye = std::min(height - 1, int(std::floor(y_hi + 1e-9)));
        for (int y = yb; y <= ye; ++y) {
            if (dashed) {
                const double u = ux * rx + uy * (y - s.y0);
                if (std::fmod(std::max(u, 0.0), period) >= s.dash_on) continue;
            }
            pixels.push_back(std::uint64_t(y) * std::uint64_t(width) + std::uint64_t(x));
        }
    }
    std::sort(pixels.begin(), pixels.end());
    return pixels;
}

// Deterministic Gaussian samples: Box-Muller over mt19937_64, so identical
// seeds give identical rasters on any platform.
class GaussianSource {
  public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}
    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const double u1 = (rng_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
        const double u2 = (rng_() >> 11) * 0x1.0p-53;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * 3.14159265358979323846 * u2);
        have_ = true;
        return mag * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::mt19937_64 rng_;
    double spare_ = 0;
    bool have_ = false;
};

}  // namespace detail

/// Rasterizes a SynthSpec into an image plus exact per-segment ground truth.
/// Overlapping segments share pixels; the darker luminance wins in the image.
inline SynthResult render_synthetic(const SynthSpec& spec, std::uint64_t seed = 0) {
    spec.validate();
    SynthResult out;
    out.image = GrayImage(spec.width, spec.height, static_cast<std::uint8_t>(spec.background));
    out.masks.width = spec.width;
    out.masks.height = spec.height;

    int id = 0;
    for (const SynthSegment& s : spec.segments) {
        auto pixels = detail::rasterize_segment(s, spec.width, spec.height);
        for (std::uint64_t key : pixels) {
            std::uint8_t& px = out.image.data[key];
            px = std::min(px, static_cast<std::uint8_t>(s.luminance));
        }
        out.masks.masks.push_back(std::move(pixels));
        out.masks.ids.push_back(id);
        out.segments.push_back(Segment{s.x0, s.y0, s.x1, s.y1, id});
        ++id;
    }

    if (spec.noise_sigma > 0) {
        detail::GaussianSource gauss(seed);
        for (std::uint8_t& px : out.image.data) {
            const double v = px + spec.noise_sigma * gauss.next();
            px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
        }
    }
    return out;
}

}  // namespace linetrack
