// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Sliding-window PCE analysis of a full image against a camera fingerprint,
/// tampering-probability maps, and map rendering.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image.hpp"
#include "prnu/matching.hpp"
#include "prnu/parallel.hpp"

namespace prnu {

/// Grid of per-window values. Entry (col, row) covers the window whose
/// top-left image pixel is (col * stride, row * stride).
struct HeatMap {
    ImagePlane values;
    std::size_t window = 0;
    std::size_t stride = 0;

    std::size_t cols() const noexcept { return values.width(); }
    std::size_t rows() const noexcept { return values.height(); }
};

inline constexpr std::size_t kDefaultWindow = 128;
inline constexpr std::size_t kDefaultStride = 64;

inline std::size_t grid_extent(std::size_t image_dim, std::size_t window, std::size_t stride) {
    return (image_dim - window) / stride + 1;
}

/// Local PCE responses with the correlation peak fixed at zero shift.
inline HeatMap pce_map(const ImagePlane& image, const NoiseResidual& residual, const Fingerprint& fp,
                       std::size_t window = kDefaultWindow, std::size_t stride = kDefaultStride,
                       std::size_t exclusion_radius = kDefaultExclusionRadius) {
    if (!image.same_shape(fp.plane)) throw ShapeError("pce_map: image and fingerprint dimensions differ");
    if (!image.same_shape(residual.plane)) throw ShapeError("pce_map: image and residual dimensions differ");
    if (stride == 0) throw ArgumentError("pce_map: stride must be >= 1");
    if (window == 0 || window > std::min(image.width(), image.height()))
        throw SizeError("pce_map: window larger than image");
    const std::size_t cols = grid_extent(image.width(), window, stride);
    const std::size_t rows = grid_extent(image.height(), window, stride);
    HeatMap map{ImagePlane(cols, rows), window, stride};
    parallel_for(rows * cols, [&](std::size_t i) {
        const std::size_t c = i % cols, r = i / cols;
        map.values(c, r) =
            match_patch_synchronized(image, residual, fp, c * stride, r * stride, window, exclusion_radius).pce;
    });
    return map;
}

inline HeatMap pce_map(const ImagePlane& image, const Fingerprint& fp, std::size_t window = kDefaultWindow,
                       std::size_t stride = kDefaultStride, const DenoiserSpec& denoiser = {}) {
    if (!image.same_shape(fp.plane)) throw ShapeError("pce_map: image and fingerprint dimensions differ");
    if (window == 0 || window > std::min(image.width(), image.height()))
        throw SizeError("pce_map: window larger than image");
    return pce_map(image, residual(image, denoiser), fp, window, stride);
}

/// Probability that a window is not explained by the fingerprint:
/// erfc(sign(pce) * sqrt(|pce|) / sqrt2) / 2. Equals the PCE p-value for
/// positive PCE, 0.5 at zero and tends to 1 for strongly negative PCE.
inline double tampering_probability(double pce) {
    const double z = std::copysign(std::sqrt(std::abs(pce)), pce);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

inline HeatMap probability_map(const HeatMap& pce) {
    HeatMap out = pce;
    for (double& v : out.values.samples()) v = tampering_probability(v);
    return out;
}

enum class MapPostprocess { none, median3 };

/// 3x3 median with symmetric boundary extension.
inline ImagePlane median3(const ImagePlane& plane) {
    ImagePlane out(plane.width(), plane.height());
    const long w = static_cast<long>(plane.width()), h = static_cast<long>(plane.height());
    std::array<double, 9> win{};
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (long dy = -1; dy <= 1; ++dy)
                for (long dx = -1; dx <= 1; ++dx)
                    win[n++] = plane(detail::mirror_index(x + dx, w), detail::mirror_index(y + dy, h));
            std::nth_element(win.begin(), win.begin() + 4, win.end());
            out(x, y) = win[4];
        }
    return out;
}

/// Maps values in [lo, hi] to 8-bit gray, rounding half up. Without an
/// explicit range, maps already in [0,1] use it directly and other maps are
/// stretched between their minimum and maximum.
inline ImagePlane render_levels(const HeatMap& map, MapPostprocess post = MapPostprocess::none,
                                std::optional<std::pair<double, double>> range = std::nullopt) {
    ImagePlane v = post == MapPostprocess::median3 ? median3(map.values) : map.values;
    auto [lo_it, hi_it] = std::minmax_element(v.samples().begin(), v.samples().end());
    double lo = 0.0, hi = 1.0;
    if (range) {
        std::tie(lo, hi) = *range;
    } else if (*lo_it < 0.0 || *hi_it > 1.0) {
        lo = *lo_it;
        hi = *hi_it;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& s : v.samples()) s = std::floor(std::clamp((s - lo) / span, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
    return v;
}

inline void render_map(const HeatMap& map, const std::filesystem::path& path,
                       MapPostprocess post = MapPostprocess::none,
                       std::optional<std::pair<double, double>> range = std::nullopt) {
    save_pgm(render_levels(map, post, range), path, 8);
}

inline nlohmann::json to_json(const HeatMap& map) {
    return {{"cols", map.cols()},
            {"rows", map.rows()},
            {"window", map.window},
            {"stride", map.stride},
            {"values", std::vector<double>(map.values.samples().begin(), map.values.samples().end())}};
}

inline HeatMap heat_map_from_json(const nlohmann::json& j) {
    try {
        HeatMap map{ImagePlane(j.at("cols").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                               j.at("values").get<std::vector<double>>()),
                    j.at("window").get<std::size_t>(), j.at("stride").get<std::size_t>()};
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("heat map JSON: ") + e.what());
    }
}

} // namespace prnu
