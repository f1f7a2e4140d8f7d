// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Noise residuals, maximum-likelihood PRNU estimation, zero-mean cleanup,
/// optional spectral whitening, and the binary fingerprint file format.

#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fft.hpp"
#include "prnu/image.hpp"

namespace prnu {

struct NoiseResidual {
    ImagePlane plane;
    std::string source_id;
};

struct Fingerprint {
    ImagePlane plane;
    std::string camera_id;
    std::string pipeline_id;
    std::size_t n_sources = 0;

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// R = I - D(I).
inline NoiseResidual residual(const ImagePlane& image, const DenoiserSpec& denoiser, std::string source_id = {}) {
    ImagePlane r = denoise(image, denoiser);
    auto in = image.samples();
    auto out = r.samples();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] - out[i];
    return {std::move(r), std::move(source_id)};
}

inline constexpr double kSaturationLevel = 254.0 / 255.0;

struct EstimationOptions {
    /// Pixels at or above this level are left out of an image's
    /// contribution. nullopt disables the exclusion.
    std::optional<double> saturation_level = kSaturationLevel;
    std::string camera_id;
    std::string pipeline_id;
};

/// Streaming accumulator for k = sum(R_i * I_i) / sum(I_i^2).
///
/// Per-image terms are combined by pairwise summation: partial sums are kept
/// on a binary-counter stack and merged only with partials covering the same
/// number of images, so rounding error grows with log N.
class FingerprintAccumulator {
public:
    explicit FingerprintAccumulator(EstimationOptions options = {}) : options_(std::move(options)) {}

    void add(const ImagePlane& image, const ImagePlane& residual) {
        if (!image.same_shape(residual)) throw ShapeError("estimate_fingerprint: image/residual dimension mismatch");
        if (count_ > 0 && (image.width() != width_ || image.height() != height_))
            throw ShapeError("estimate_fingerprint: images differ in dimensions");
        width_ = image.width();
        height_ = image.height();

        Partial term{1, std::vector<double>(image.size()), std::vector<double>(image.size())};
        auto I = image.samples();
        auto R = residual.samples();
        for (std::size_t i = 0; i < I.size(); ++i) {
            if (options_.saturation_level && I[i] >= *options_.saturation_level) continue;
            term.num[i] = R[i] * I[i];
            term.den[i] = I[i] * I[i];
        }
        push(std::move(term));
        ++count_;
    }

    void add(const ImagePlane& image, const NoiseResidual& residual) { add(image, residual.plane); }

    std::size_t count() const noexcept { return count_; }

    /// Folds another accumulator's partial sums into this one.
    void merge(const FingerprintAccumulator& other) {
        if (other.count_ == 0) return;
        if (count_ > 0 && (other.width_ != width_ || other.height_ != height_))
            throw ShapeError("estimate_fingerprint: images differ in dimensions");
        width_ = other.width_;
        height_ = other.height_;
        for (const auto& p : other.stack_) push(p);
        count_ += other.count_;
    }

    Fingerprint finish() const {
        if (count_ == 0) throw ArgumentError("estimate_fingerprint: no images");
        std::vector<double> num(width_ * height_, 0.0), den(width_ * height_, 0.0);
        // Fold from the smallest partial upward so the result is a pairwise tree.
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
            for (std::size_t i = 0; i < num.size(); ++i) {
                num[i] += it->num[i];
                den[i] += it->den[i];
            }
        ImagePlane k(width_, height_);
        auto out = k.samples();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = den[i] > 0.0 ? num[i] / den[i] : 0.0;
        return {std::move(k), options_.camera_id, options_.pipeline_id, count_};
    }

private:
    struct Partial {
        std::size_t images;
        std::vector<double> num, den;
    };

    void push(Partial term) {
        while (!stack_.empty() && stack_.back().images == term.images) {
            Partial& top = stack_.back();
            for (std::size_t i = 0; i < term.num.size(); ++i) {
                term.num[i] += top.num[i];
                term.den[i] += top.den[i];
            }
            term.images += top.images;
            stack_.pop_back();
        }
        stack_.push_back(std::move(term));
    }

    EstimationOptions options_;
    std::size_t width_ = 0, height_ = 0, count_ = 0;
    std::vector<Partial> stack_;
};

inline Fingerprint estimate_fingerprint(const std::vector<ImagePlane>& images,
                                        const std::vector<NoiseResidual>& residuals,
                                        EstimationOptions options = {}) {
    if (images.empty() || residuals.empty()) throw ArgumentError("estimate_fingerprint: empty input list");
    if (images.size() != residuals.size())
        throw ShapeError("estimate_fingerprint: image and residual lists differ in length");
    FingerprintAccumulator acc(std::move(options));
    for (std::size_t i = 0; i < images.size(); ++i) acc.add(images[i], residuals[i]);
    return acc.finish();
}

/// Removes row means, then column means.
inline Fingerprint clean_fingerprint(Fingerprint fp) {
    ImagePlane& k = fp.plane;
    const std::size_t w = k.width(), h = k.height();
    for (std::size_t y = 0; y < h; ++y) {
        auto row = k.row(y);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(w);
        for (double& v : row) v -= mean;
    }
    std::vector<double> col_mean(w, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) col_mean[x] += k(x, y);
    for (double& m : col_mean) m /= static_cast<double>(h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) k(x, y) -= col_mean[x];
    return fp;
}

/// Flattens the fingerprint's magnitude spectrum: the DFT magnitude is
/// replaced by its wavelet-Wiener residual (periodic artifacts such as JPEG
/// grids stand out as spectral peaks and are suppressed) while phases are
/// kept. Not part of the default estimation path.
inline Fingerprint whiten_fingerprint(Fingerprint fp) {
    const std::size_t w = fp.plane.width(), h = fp.plane.height();
    double mean = 0.0, sq = 0.0;
    for (double v : fp.plane.samples()) {
        mean += v;
        sq += v * v;
    }
    const double n = static_cast<double>(w * h);
    mean /= n;
    const double variance = sq / n - mean * mean;
    if (!(variance > 0)) return fp;

    auto spec = fft::forward(fp.plane.samples(), w, h);
    const std::size_t hw = w / 2 + 1;
    ImagePlane magnitude(hw, h);
    const double norm = 1.0 / std::sqrt(n);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < hw; ++x) {
            const auto& c = spec.data()[y * hw + x];
            magnitude(x, y) = std::hypot(c[0], c[1]) * norm;
        }
    if (hw < kWaveletMinSize || h < kWaveletMinSize) throw SizeError("whiten_fingerprint: fingerprint too small");
    NoiseResidual flat = residual(magnitude, DenoiserSpec::wavelet(variance));
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < hw; ++x) {
            auto& c = spec.data()[y * hw + x];
            const double m = magnitude(x, y);
            const double scale = m > 0.0 ? flat.plane(x, y) / m : 0.0;
            c[0] *= scale;
            c[1] *= scale;
        }
    fp.plane = ImagePlane(w, h, fft::inverse(std::move(spec)));
    return fp;
}

// ---------------------------------------------------------------------------
// File format: "PRNU1\n", key=value header lines, "--\n", then
// width*height little-endian IEEE-754 doubles, row-major.

inline constexpr std::string_view kFingerprintMagic = "PRNU1\n";

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
        return r;
    }
    return v;
}

inline void check_header_value(const std::string& key, const std::string& value) {
    if (value.find('\n') != std::string::npos)
        throw ArgumentError("save_fingerprint: " + key + " must not contain a newline");
}

} // namespace detail

inline void save_fingerprint(const Fingerprint& fp, const std::filesystem::path& path) {
    detail::check_header_value("camera", fp.camera_id);
    detail::check_header_value("pipeline", fp.pipeline_id);
    std::ostringstream header;
    header << kFingerprintMagic << "width=" << fp.plane.width() << "\nheight=" << fp.plane.height()
           << "\ncamera=" << fp.camera_id << "\npipeline=" << fp.pipeline_id << "\nn=" << fp.n_sources
           << "\n--\n";
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (double v : fp.plane.samples()) {
        std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline Fingerprint load_fingerprint(const std::filesystem::path& path) {
    auto bytes = detail::read_file(path);
    const std::string_view all(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!all.starts_with(kFingerprintMagic)) throw FormatError("fingerprint: bad magic in " + path.string());
    const auto sep = all.find("\n--\n", kFingerprintMagic.size() - 1);
    if (sep == std::string_view::npos) throw FormatError("fingerprint: missing header terminator");

    std::optional<std::size_t> width, height, n;
    Fingerprint fp;
    std::istringstream lines(std::string(all.substr(kFingerprintMagic.size(), sep + 1 - kFingerprintMagic.size())));
    auto parse_count = [](const std::string& v, const char* key) -> std::size_t {
        std::size_t pos = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(v, &pos);
        } catch (const std::exception&) {
            throw FormatError(std::string("fingerprint: bad ") + key + " value");
        }
        if (pos != v.size() || v.empty() || v[0] == '-') throw FormatError(std::string("fingerprint: bad ") + key + " value");
        return static_cast<std::size_t>(value);
    };
    for (std::string line; std::getline(lines, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("fingerprint: malformed header line");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "width") width = parse_count(value, "width");
        else if (key == "height") height = parse_count(value, "height");
        else if (key == "n") n = parse_count(value, "n");
        else if (key == "camera") fp.camera_id = value;
        else if (key == "pipeline") fp.pipeline_id = value;
        else throw FormatError("fingerprint: unknown header key '" + key + "'");
    }
    if (!width || !height || !n) throw FormatError("fingerprint: incomplete header");
    if (*width == 0 || *height == 0) throw FormatError("fingerprint: zero dimension");
    if (*n == 0) throw FormatError("fingerprint: n must be >= 1");

    const std::size_t payload_offset = sep + 4;
    const std::size_t count = *width * *height;
    if (count / *width != *height || bytes.size() - payload_offset != count * sizeof(double))
        throw FormatError("fingerprint: header dimensions inconsistent with payload length");
    std::vector<double> samples(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, bytes.data() + payload_offset + i * sizeof bits, sizeof bits);
        samples[i] = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    try {
        fp.plane = ImagePlane(*width, *height, std::move(samples));
    } catch (const Error& e) {
        throw FormatError(std::string("fingerprint: ") + e.what());
    }
    fp.n_sources = *n;
    return fp;
}

} // namespace prnu
