#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "linetrack/error.hpp"
#include "linetrack/image.hpp"

namespace linetrack {

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {  // comment runs to end of line
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok.empty() ? EOF : 0;
}

inline int pgm_int_field(std::istream& in, const char* field, int lo, int hi) {
    std::string tok;
    if (pgm_next_token(in, tok) == EOF)
        throw FormatError(std::string("PGM: missing ") + field);
    int v = 0;
    try {
        v = std::stoi(tok);
    } catch (const std::exception&) {
        throw FormatError(std::string("PGM: bad ") + field + " '" + tok + "'");
    }
    if (v < lo || v > hi)
        throw FormatError(std::string("PGM: ") + field + " " + tok + " out of range");
    return v;
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

/// Reads a binary PGM (P5, maxval 255).
inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    if (detail::pgm_next_token(in, magic) == EOF || magic != "P5")
        throw FormatError("PGM: magic '" + magic + "' is not P5");
    int w = detail::pgm_int_field(in, "width", 1, 1 << 24);
    int h = detail::pgm_int_field(in, "height", 1, 1 << 24);
    int maxval = detail::pgm_int_field(in, "maxval", 1, 65535);
    if (maxval != 255)
        throw FormatError("PGM: maxval " + std::to_string(maxval) + " unsupported (want 255)");
    // the tokenizer already consumed the single whitespace byte after maxval
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw FormatError("PGM: pixel data truncated");
    return img;
}

inline void save_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

/// Reads an 8-bit grayscale PNG. Anything else is a format error naming the
/// offending header field.
inline GrayImage load_png_gray(const std::string& path) {
    detail::PngReader r;
    r.fp = std::fopen(path.c_str(), "rb");
    if (!r.fp) throw IoError("cannot open " + path);
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info) throw IoError("libpng init failed");
    // declared before setjmp so a longjmp cannot skip their initialization
    GrayImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(r.png))) throw FormatError("PNG: corrupt stream in " + path);
    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);

    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw FormatError("PNG: color type " + std::to_string(color) + " unsupported (want grayscale)");
    if (depth != 8)
        throw FormatError("PNG: bit depth " + std::to_string(depth) + " unsupported (want 8)");

    png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);
    img = GrayImage(static_cast<int>(png_get_image_width(r.png, r.info)),
                    static_cast<int>(png_get_image_height(r.png, r.info)));
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] = img.data.data() + static_cast<std::size_t>(y) * img.width;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

/// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 3 bytes per pixel
};

inline RgbImage load_png_rgb(const std::string& path) {
    detail::PngReader r;
    r.fp = std::fopen(path.c_str(), "rb");
    if (!r.fp) throw IoError("cannot open " + path);
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info) throw IoError("libpng init failed");
    RgbImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(r.png))) throw FormatError("PNG: corrupt stream in " + path);
    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);
    if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_RGB)
        throw FormatError("PNG: color type " +
                          std::to_string(png_get_color_type(r.png, r.info)) +
                          " unsupported (want RGB)");
    if (png_get_bit_depth(r.png, r.info) != 8)
        throw FormatError("PNG: bit depth " + std::to_string(png_get_bit_depth(r.png, r.info)) +
                          " unsupported (want 8)");
    png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);
    img.width = static_cast<int>(png_get_image_width(r.png, r.info));
    img.height = static_cast<int>(png_get_image_height(r.png, r.info));
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            img.data.data() + static_cast<std::size_t>(y) * img.width * 3;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

namespace detail {

inline void save_png(const std::string& path, int width, int height, int channels,
                     const std::uint8_t* data) {
    PngWriter w;
    w.fp = std::fopen(path.c_str(), "wb");
    if (!w.fp) throw IoError("cannot write " + path);
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info) throw IoError("libpng init failed");
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(w.png))) throw IoError("PNG write failed: " + path);
    png_init_io(w.png, w.fp);
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(data + static_cast<std::size_t>(y) * width * channels);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

}  // namespace detail

inline void save_png_gray(const std::string& path, const GrayImage& img) {
    detail::save_png(path, img.width, img.height, 1, img.data.data());
}

/// Interleaved RGB, row-major, 3 bytes per pixel.
inline void save_png_rgb(const std::string& path, int width, int height,
                         const std::vector<std::uint8_t>& rgb) {
    detail::save_png(path, width, height, 3, rgb.data());
}

/// Loads a grayscale raster, dispatching on the file's magic bytes
/// (PGM "P5" or the PNG signature).
inline GrayImage load_gray(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path);
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), 8);
    probe.close();
    if (sig[0] == 'P' && sig[1] == '5') return load_pgm(path);
    if (!png_sig_cmp(sig, 0, 8)) return load_png_gray(path);
    throw FormatError("magic bytes of " + path + " are neither PGM (P5) nor PNG");
}

inline void save_gray(const std::string& path, const GrayImage& img) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
        save_png_gray(path, img);
    else
        save_pgm(path, img);
}

}  // namespace linetrack
