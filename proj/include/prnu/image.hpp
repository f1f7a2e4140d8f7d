// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Pixel containers, luminance reduction, cropping, patch tiling and
/// binary PGM/PPM input/output.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prnu/error.hpp"

namespace prnu {

/// Single-channel 2-D grid of doubles, row-major. Nominal range is [0,1]
/// for images; residuals and fingerprints are zero-centred.
class ImagePlane {
public:
    ImagePlane() = default;

    ImagePlane(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), samples_(checked_area(width, height), fill) {
        if (!std::isfinite(fill)) throw ArgumentError("ImagePlane: non-finite fill value");
    }

    ImagePlane(std::size_t width, std::size_t height, std::vector<double> samples)
        : width_(width), height_(height), samples_(std::move(samples)) {
        if (samples_.size() != checked_area(width, height))
            throw ShapeError("ImagePlane: sample count does not match width*height");
        for (double v : samples_)
            if (!std::isfinite(v)) throw ArgumentError("ImagePlane: non-finite sample");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    double operator()(std::size_t x, std::size_t y) const noexcept { return samples_[y * width_ + x]; }
    double& operator()(std::size_t x, std::size_t y) noexcept { return samples_[y * width_ + x]; }

    std::span<const double> samples() const noexcept { return samples_; }
    std::span<double> samples() noexcept { return samples_; }
    std::span<const double> row(std::size_t y) const noexcept {
        return std::span<const double>(samples_).subspan(y * width_, width_);
    }
    std::span<double> row(std::size_t y) noexcept {
        return std::span<double>(samples_).subspan(y * width_, width_);
    }

    bool same_shape(const ImagePlane& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

private:
    static std::size_t checked_area(std::size_t w, std::size_t h) {
        if (w == 0 || h == 0) throw ArgumentError("ImagePlane: width and height must be >= 1");
        return w * h;
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> samples_;
};

/// Non-owning rectangular window into an ImagePlane. The plane must outlive
/// the view.
struct PlaneView {
    const ImagePlane* plane = nullptr;
    std::size_t x0 = 0, y0 = 0, width = 0, height = 0;

    double operator()(std::size_t x, std::size_t y) const noexcept { return (*plane)(x0 + x, y0 + y); }

    ImagePlane materialize() const {
        ImagePlane out(width, height);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) out(x, y) = (*this)(x, y);
        return out;
    }
};

struct ColorImage {
    ImagePlane r, g, b;

    ColorImage() = default;
    ColorImage(ImagePlane red, ImagePlane green, ImagePlane blue)
        : r(std::move(red)), g(std::move(green)), b(std::move(blue)) {
        if (!r.same_shape(g) || !r.same_shape(b))
            throw ShapeError("ColorImage: channel dimensions differ");
    }
    static ColorImage gray(const ImagePlane& p) { return ColorImage(p, p, p); }

    std::size_t width() const noexcept { return r.width(); }
    std::size_t height() const noexcept { return r.height(); }

    friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

// ITU-R BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline ImagePlane to_luminance(const ColorImage& img) {
    ImagePlane out(img.width(), img.height());
    auto r = img.r.samples(), g = img.g.samples(), b = img.b.samples();
    auto o = out.samples();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = kLumaR * r[i] + kLumaG * g[i] + kLumaB * b[i];
    return out;
}

inline ImagePlane crop(const ImagePlane& plane, std::size_t x0, std::size_t y0, std::size_t w,
                       std::size_t h) {
    if (w == 0 || h == 0 || x0 + w > plane.width() || y0 + h > plane.height() || x0 + w < x0 ||
        y0 + h < y0)
        throw BoundsError("crop: rectangle outside plane");
    return PlaneView{&plane, x0, y0, w, h}.materialize();
}

inline ColorImage crop(const ColorImage& img, std::size_t x0, std::size_t y0, std::size_t w,
                       std::size_t h) {
    return ColorImage(crop(img.r, x0, y0, w, h), crop(img.g, x0, y0, w, h), crop(img.b, x0, y0, w, h));
}

/// Circular shift: out(x, y) = in(x - dx, y - dy) with wrap-around, so that
/// content moves by (+dx, +dy).
inline ImagePlane circular_shift(const ImagePlane& plane, long dx, long dy) {
    const long w = static_cast<long>(plane.width()), h = static_cast<long>(plane.height());
    ImagePlane out(plane.width(), plane.height());
    for (long y = 0; y < h; ++y) {
        long sy = ((y - dy) % h + h) % h;
        for (long x = 0; x < w; ++x) {
            long sx = ((x - dx) % w + w) % w;
            out(x, y) = plane(sx, sy);
        }
    }
    return out;
}

/// Zero-pads on the right and bottom to (width, height).
inline ImagePlane pad_to(const ImagePlane& plane, std::size_t width, std::size_t height) {
    if (width < plane.width() || height < plane.height()) throw BoundsError("pad_to: target smaller than plane");
    ImagePlane out(width, height, 0.0);
    for (std::size_t y = 0; y < plane.height(); ++y)
        std::copy(plane.row(y).begin(), plane.row(y).end(), out.row(y).begin());
    return out;
}

struct Patch {
    std::size_t x = 0, y = 0;
    PlaneView view;
};

/// Regular grid of disjoint square patches anchored at (0,0). Remainder
/// rows and columns are discarded.
struct PatchGrid {
    std::size_t patch_size = 0;
    std::size_t rows = 0, cols = 0;
    std::vector<Patch> patches;
};

inline PatchGrid tile_patches(const ImagePlane& plane, std::size_t patch_size) {
    if (patch_size == 0) throw ArgumentError("tile_patches: patch_size must be >= 1");
    if (patch_size > std::min(plane.width(), plane.height()))
        throw SizeError("tile_patches: patch larger than plane; grid would be empty");
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.rows = plane.height() / patch_size;
    grid.cols = plane.width() / patch_size;
    grid.patches.reserve(grid.rows * grid.cols);
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c) {
            std::size_t x = c * patch_size, y = r * patch_size;
            grid.patches.push_back({x, y, PlaneView{&plane, x, y, patch_size, patch_size}});
        }
    return grid;
}

inline std::size_t patch_count(std::size_t width, std::size_t height, std::size_t patch_size) {
    return patch_size == 0 ? 0 : (width / patch_size) * (height / patch_size);
}

// ---------------------------------------------------------------------------
// Binary PNM (P5 gray, P6 RGB), 8- or 16-bit big-endian.

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(const std::vector<unsigned char>& b) : bytes_(b) {}

    unsigned long next_number() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw FormatError("PNM: malformed header");
        unsigned long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 0xFFFFFFFFul) throw FormatError("PNM: header value out of range");
        }
        return v;
    }
    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("PNM: malformed header");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 2;
};

inline void write_file(const std::filesystem::path& path, const std::string& header,
                       const std::vector<unsigned char>& raster) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline unsigned quantize(double v, unsigned maxval) {
    double q = std::round(std::clamp(v, 0.0, 1.0) * maxval);
    return static_cast<unsigned>(q);
}

inline void put_sample(std::vector<unsigned char>& out, unsigned s, bool wide) {
    if (wide) out.push_back(static_cast<unsigned char>(s >> 8));
    out.push_back(static_cast<unsigned char>(s & 0xFF));
}

} // namespace detail

/// Loads a binary PGM or PPM. Samples are divided by the header's maxval.
/// Gray files are returned with R = G = B.
inline ColorImage load_image(const std::filesystem::path& path) {
    auto bytes = detail::read_file(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("unsupported image format (expected binary PGM/PPM): " + path.string());
    const bool rgb = bytes[1] == '6';
    detail::PnmHeaderReader header(bytes);
    unsigned long w = header.next_number();
    unsigned long h = header.next_number();
    unsigned long maxval = header.next_number();
    std::size_t offset = header.raster_offset();
    if (w == 0 || h == 0) throw FormatError("PNM: zero-dimension image: " + path.string());
    if (maxval == 0 || maxval > 65535) throw FormatError("PNM: maxval out of range");
    const bool wide = maxval > 255;
    const std::size_t channels = rgb ? 3 : 1;
    const std::size_t need = w * h * channels * (wide ? 2 : 1);
    if (bytes.size() - offset < need) throw FormatError("PNM: truncated raster: " + path.string());

    ImagePlane planes[3] = {ImagePlane(w, h), ImagePlane(w, h), ImagePlane(w, h)};
    const double scale = 1.0 / static_cast<double>(maxval);
    const unsigned char* p = bytes.data() + offset;
    for (std::size_t i = 0; i < w * h; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            unsigned s = wide ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
            p += wide ? 2 : 1;
            if (s > maxval) throw FormatError("PNM: sample exceeds maxval");
            planes[c].samples()[i] = s * scale;
        }
    }
    if (!rgb) return ColorImage::gray(planes[0]);
    return ColorImage(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

/// Writes a binary PGM; values are clamped to [0,1] and rounded half up.
inline void save_pgm(const ImagePlane& plane, const std::filesystem::path& path, int bit_depth = 16) {
    if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("save_pgm: bit depth must be 8 or 16");
    const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
    std::vector<unsigned char> raster;
    raster.reserve(plane.size() * (bit_depth / 8));
    for (double v : plane.samples()) detail::put_sample(raster, detail::quantize(v, maxval), bit_depth == 16);
    detail::write_file(path,
                       "P5\n" + std::to_string(plane.width()) + " " + std::to_string(plane.height()) + "\n" +
                           std::to_string(maxval) + "\n",
                       raster);
}

inline void save_ppm(const ColorImage& img, const std::filesystem::path& path, int bit_depth = 16) {
    if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("save_ppm: bit depth must be 8 or 16");
    const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
    std::vector<unsigned char> raster;
    raster.reserve(img.r.size() * 3 * (bit_depth / 8));
    auto r = img.r.samples(), g = img.g.samples(), b = img.b.samples();
    for (std::size_t i = 0; i < r.size(); ++i) {
        detail::put_sample(raster, detail::quantize(r[i], maxval), bit_depth == 16);
        detail::put_sample(raster, detail::quantize(g[i], maxval), bit_depth == 16);
        detail::put_sample(raster, detail::quantize(b[i], maxval), bit_depth == 16);
    }
    detail::write_file(path,
                       "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" +
                           std::to_string(maxval) + "\n",
                       raster);
}

} // namespace prnu
