#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "linetrack/error.hpp"

namespace linetrack {

/// 8-bit grayscale raster, row-major. 0 is black, 255 is white.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 255)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::span<const std::uint8_t> row(int y) const {
        return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
    }

    bool operator==(const GrayImage&) const = default;
};

/// Per-object pixel sets over a common raster. A pixel may belong to several
/// masks (crossings). Pixels are packed as y * width + x, sorted ascending.
struct LabelMasks {
    int width = 0;
    int height = 0;
    std::vector<std::vector<std::uint64_t>> masks;
    std::vector<int> ids;  // parallel to masks

    std::uint64_t key(int x, int y) const {
        return static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(width) +
               static_cast<std::uint64_t>(x);
    }
};

inline GrayImage transpose(const GrayImage& img) {
    GrayImage out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x) = img.at(x, y);
    return out;
}

namespace detail {

// Sliding-window extremum over each row, window size 2*radius+1 clamped to
// the image border. Monotonic deque, O(n) per row.
template <typename Cmp>
inline void window_extremum_rows(GrayImage& img, int radius, Cmp better) {
    std::vector<std::uint8_t> line(static_cast<std::size_t>(img.width));
    std::deque<int> q;
    for (int y = 0; y < img.height; ++y) {
        q.clear();
        const std::uint8_t* src = img.data.data() + static_cast<std::size_t>(y) * img.width;
        for (int x = 0; x < img.width + radius; ++x) {
            if (x < img.width) {
                while (!q.empty() && !better(src[q.back()], src[x])) q.pop_back();
                q.push_back(x);
            }
            int out = x - radius;
            if (out >= 0) {
                while (q.front() < out - radius) q.pop_front();
                line[static_cast<std::size_t>(out)] = src[q.front()];
            }
        }
        std::copy(line.begin(), line.end(), img.data.begin() + static_cast<std::size_t>(y) * img.width);
    }
}

}  // namespace detail

/// Morphological black top-hat with a square structuring element of side
/// 2*radius+1, re-inverted so dark strokes stay dark on a light background:
/// out = 255 - (closing(img) - img). A constant image maps to constant 255.
inline GrayImage black_top_hat(const GrayImage& img, int radius) {
    if (radius < 1) throw ConfigError("black_top_hat: radius must be >= 1");
    auto better_max = [](std::uint8_t a, std::uint8_t b) { return a > b; };
    auto better_min = [](std::uint8_t a, std::uint8_t b) { return a < b; };

    GrayImage closed = img;
    // dilation (max), separable
    detail::window_extremum_rows(closed, radius, better_max);
    closed = transpose(closed);
    detail::window_extremum_rows(closed, radius, better_max);
    // erosion (min)
    detail::window_extremum_rows(closed, radius, better_min);
    closed = transpose(closed);
    detail::window_extremum_rows(closed, radius, better_min);

    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        int hat = int(closed.data[i]) - int(img.data[i]);  // closing is extensive, hat >= 0
        out.data[i] = static_cast<std::uint8_t>(255 - std::clamp(hat, 0, 255));
    }
    return out;
}

}  // namespace linetrack
