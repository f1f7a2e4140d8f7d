// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Fingerprint similarity and detection: normalized correlation, circular
/// cross-correlation in the frequency domain, peak-to-correlation energy,
/// its p-value, and shift alignment of de-synchronized fingerprints.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <utility>

#include "prnu/error.hpp"
#include "prnu/fft.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image.hpp"

namespace prnu {

/// Pearson correlation of two equally sized planes.
inline double ncc(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_shape(b)) throw ShapeError("ncc: dimension mismatch");
    const auto sa = a.samples(), sb = b.samples();
    const double n = static_cast<double>(sa.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        ma += sa[i];
        mb += sb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double da = sa[i] - ma, db = sb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) throw DegenerateError("ncc: constant plane has zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Circular cross-correlation values indexed by shift; entry (sx, sy) holds
/// sum_x a(x) * b(x + s) of the mean-removed inputs.
struct CorrelationSurface {
    ImagePlane values;

    std::size_t width() const noexcept { return values.width(); }
    std::size_t height() const noexcept { return values.height(); }
    double at(std::size_t sx, std::size_t sy) const noexcept { return values(sx, sy); }
};

struct Shift {
    long dx = 0, dy = 0;
    friend bool operator==(const Shift&, const Shift&) = default;
};

/// Maps a surface index to a signed shift in (-n/2, n/2].
inline long signed_lag(std::size_t index, std::size_t n) {
    const long i = static_cast<long>(index), len = static_cast<long>(n);
    return i > len / 2 ? i - len : i;
}

inline std::size_t wrap_lag(long lag, std::size_t n) {
    const long len = static_cast<long>(n);
    return static_cast<std::size_t>(((lag % len) + len) % len);
}

namespace detail {

inline std::vector<double> mean_removed(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x -= m;
    return out;
}

} // namespace detail

inline CorrelationSurface cross_correlate(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_shape(b)) throw ShapeError("cross_correlate: dimension mismatch");
    const std::size_t w = a.width(), h = a.height();
    auto fa = fft::forward(detail::mean_removed(a.samples()), w, h);
    auto fb = fft::forward(detail::mean_removed(b.samples()), w, h);
    // conj(A) * B -> sum_x a(x) b(x + s)
    for (std::size_t i = 0; i < fb.bin_count(); ++i) {
        const double ar = fa.data()[i][0], ai = -fa.data()[i][1];
        const double br = fb.data()[i][0], bi = fb.data()[i][1];
        fb.data()[i][0] = ar * br - ai * bi;
        fb.data()[i][1] = ar * bi + ai * br;
    }
    return {ImagePlane(w, h, fft::inverse(std::move(fb)))};
}

struct PceScore {
    double pce = 0.0;
    double peak_value = 0.0;
    Shift peak;
    double p_value = 0.5;
};

/// Side length of the square excluded around the peak is 2 * radius + 1.
inline constexpr std::size_t kDefaultExclusionRadius = 5;

/// One-sided tail probability of a PCE value under the no-match model in
/// which the normalized peak is standard normal: p = erfc(sqrt(pce)/sqrt2)/2.
/// The surface area is accepted for interface symmetry but unused by this
/// closed form.
inline double p_value(double pce, std::size_t surface_area) {
    if (surface_area <= 1) throw ArgumentError("p_value: surface area must be > 1");
    if (std::isnan(pce)) throw ArgumentError("p_value: NaN statistic");
    return 0.5 * std::erfc(std::sqrt(std::max(pce, 0.0)) / std::sqrt(2.0));
}

/// PCE with the peak taken at a given surface index rather than searched.
inline PceScore pce_at(const CorrelationSurface& surface, std::size_t px, std::size_t py,
                       std::size_t exclusion_radius = kDefaultExclusionRadius) {
    const std::size_t w = surface.width(), h = surface.height();
    const std::size_t side = 2 * exclusion_radius + 1;
    if (w * h <= side * side) throw SizeError("pce: surface not larger than exclusion neighbourhood");
    if (px >= w || py >= h) throw BoundsError("pce: peak index outside surface");

    // Circular neighbourhood; clamp the side to the axis length so small
    // axes do not count a cell twice.
    const long r = static_cast<long>(exclusion_radius);
    const std::size_t nx = std::min(side, w), ny = std::min(side, h);
    double total = 0.0, excluded = 0.0;
    for (double v : surface.values.samples()) total += v * v;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t x = wrap_lag(static_cast<long>(px) - r + static_cast<long>(i), w);
            const std::size_t y = wrap_lag(static_cast<long>(py) - r + static_cast<long>(j), h);
            const double v = surface.at(x, y);
            excluded += v * v;
        }
    const double energy = std::max(0.0, total - excluded) / static_cast<double>(w * h - nx * ny);
    const double peak = surface.at(px, py);
    if (!(energy > 0.0)) throw DegenerateError("pce: zero off-peak correlation energy");

    PceScore s;
    s.peak_value = peak;
    s.pce = std::copysign(peak * peak / energy, peak);
    if (peak == 0.0) s.pce = 0.0;
    s.peak = {signed_lag(px, w), signed_lag(py, h)};
    s.p_value = p_value(s.pce, w * h);
    return s;
}

/// PCE at the maximum-magnitude entry (first in row-major order on ties).
inline PceScore pce(const CorrelationSurface& surface, std::size_t exclusion_radius = kDefaultExclusionRadius) {
    const auto v = surface.values.samples();
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v[best] == 0.0) throw DegenerateError("pce: correlation surface is identically zero");
    return pce_at(surface, best % surface.width(), best / surface.width(), exclusion_radius);
}

// ---------------------------------------------------------------------------

struct Alignment {
    Shift shift;
    double correlation = 0.0;
};

/// NCC of the region where fa(x) and fb(x + s) overlap without wrapping.
inline double overlap_ncc(const ImagePlane& fa, const ImagePlane& fb, Shift s) {
    const long w = static_cast<long>(fa.width()), h = static_cast<long>(fa.height());
    const long x0 = std::max(0L, -s.dx), x1 = std::min(w, w - s.dx);
    const long y0 = std::max(0L, -s.dy), y1 = std::min(h, h - s.dy);
    if (x1 <= x0 || y1 <= y0) throw SizeError("align: shifted planes do not overlap");
    const auto ow = static_cast<std::size_t>(x1 - x0), oh = static_cast<std::size_t>(y1 - y0);
    return ncc(crop(fa, x0, y0, ow, oh), crop(fb, x0 + s.dx, y0 + s.dy, ow, oh));
}

/// Finds s within +-max_shift maximizing sum_x fa(x) fb(x + s), so that
/// fb shifted back by s lines up with fa. Ties prefer the smallest
/// |dx| + |dy|, then row-major order of (dy, dx).
inline Alignment align(const ImagePlane& fa, const ImagePlane& fb, std::size_t max_shift) {
    if (!fa.same_shape(fb)) throw ShapeError("align: dimension mismatch");
    if (2 * max_shift >= std::min(fa.width(), fa.height()))
        throw ArgumentError("align: max_shift must be below half the smaller dimension");
    const auto surface = cross_correlate(fa, fb);
    const long m = static_cast<long>(max_shift);
    Shift best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (long dy = -m; dy <= m; ++dy)
        for (long dx = -m; dx <= m; ++dx) {
            const double v = surface.at(wrap_lag(dx, fa.width()), wrap_lag(dy, fa.height()));
            const long l1 = std::labs(dx) + std::labs(dy), best_l1 = std::labs(best.dx) + std::labs(best.dy);
            if (v > best_value || (v == best_value && l1 < best_l1)) {
                best_value = v;
                best = {dx, dy};
            }
        }
    return {best, overlap_ncc(fa, fb, best)};
}

inline Alignment align(const Fingerprint& fa, const Fingerprint& fb, std::size_t max_shift) {
    return align(fa.plane, fb.plane, max_shift);
}

// ---------------------------------------------------------------------------

namespace detail {

inline CorrelationSurface patch_surface(const ImagePlane& test_image, const ImagePlane& test_residual,
                                        const Fingerprint& fp, std::size_t x, std::size_t y, std::size_t pw,
                                        std::size_t ph) {
    if (!test_image.same_shape(test_residual)) throw ShapeError("match_patch: image/residual dimension mismatch");
    if (pw == 0 || ph == 0 || x + pw > test_image.width() || y + ph > test_image.height() ||
        x + pw > fp.plane.width() || y + ph > fp.plane.height())
        throw BoundsError("match_patch: patch does not fit at origin");
    ImagePlane expected(pw, ph), observed(pw, ph);
    for (std::size_t j = 0; j < ph; ++j)
        for (std::size_t i = 0; i < pw; ++i) {
            expected(i, j) = test_image(x + i, y + j) * fp.plane(x + i, y + j);
            observed(i, j) = test_residual(x + i, y + j);
        }
    return cross_correlate(expected, observed);
}

} // namespace detail

/// Correlates the test residual with the expected PRNU term I * k over a
/// square patch at `origin` and scores the surface with PCE, searching all
/// circular shifts for the peak.
inline PceScore match_patch(const ImagePlane& test_image, const NoiseResidual& test_residual, const Fingerprint& fp,
                            std::size_t x, std::size_t y, std::size_t size,
                            std::size_t exclusion_radius = kDefaultExclusionRadius) {
    return pce(detail::patch_surface(test_image, test_residual.plane, fp, x, y, size, size), exclusion_radius);
}

/// Rectangular variant of match_patch; used to score a whole image.
inline PceScore match_region(const ImagePlane& test_image, const NoiseResidual& test_residual, const Fingerprint& fp,
                             std::size_t x, std::size_t y, std::size_t width, std::size_t height,
                             std::size_t exclusion_radius = kDefaultExclusionRadius) {
    return pce(detail::patch_surface(test_image, test_residual.plane, fp, x, y, width, height), exclusion_radius);
}

/// Same as match_patch but with the peak fixed at zero shift (synchronized
/// analysis for geometrically aligned images).
inline PceScore match_patch_synchronized(const ImagePlane& test_image, const NoiseResidual& test_residual,
                                         const Fingerprint& fp, std::size_t x, std::size_t y, std::size_t size,
                                         std::size_t exclusion_radius = kDefaultExclusionRadius) {
    return pce_at(detail::patch_surface(test_image, test_residual.plane, fp, x, y, size, size), 0, 0, exclusion_radius);
}

} // namespace prnu
