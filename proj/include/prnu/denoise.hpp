// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Denoising filters D used to form noise residuals R = I - D(I).
///
/// The wavelet denoiser is a 4-level orthogonal decomposition with the
/// 8-tap Daubechies filter pair and locally adaptive Wiener shrinkage of
/// every detail subband; the approximation band is kept untouched. The
/// Gaussian denoiser is a plain separable blur used as a cross-check.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/image.hpp"

namespace prnu {

enum class DenoiserKind { wavelet, gaussian };

/// Default wavelet noise variance: sigma = 3 on the 8-bit scale.
inline constexpr double kDefaultNoiseVariance = (3.0 / 255.0) * (3.0 / 255.0);

struct DenoiserSpec {
    DenoiserKind kind = DenoiserKind::wavelet;
    double noise_variance = kDefaultNoiseVariance;
    double sigma = 1.0;

    static DenoiserSpec wavelet(double variance = kDefaultNoiseVariance) {
        return {DenoiserKind::wavelet, variance, 1.0};
    }
    static DenoiserSpec gaussian(double sigma) { return {DenoiserKind::gaussian, kDefaultNoiseVariance, sigma}; }

    void validate() const {
        if (!(noise_variance > 0) || !std::isfinite(noise_variance))
            throw ArgumentError("DenoiserSpec: noise_variance must be > 0");
        if (!(sigma > 0) || !std::isfinite(sigma)) throw ArgumentError("DenoiserSpec: sigma must be > 0");
    }

    friend bool operator==(const DenoiserSpec&, const DenoiserSpec&) = default;
};

inline std::string to_string(DenoiserKind k) { return k == DenoiserKind::wavelet ? "wavelet" : "gaussian"; }

namespace detail {

/// Half-sample symmetric index: ... c b a | a b c ... | c b a ...
inline std::size_t mirror_index(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * n;
    long j = i % period;
    if (j < 0) j += period;
    return static_cast<std::size_t>(j < n ? j : period - 1 - j);
}

// 8-tap Daubechies analysis low-pass filter (four vanishing moments).
inline constexpr std::array<double, 8> kDaubLow = {
    0.2303778133088964,  0.7148465705529154, 0.6308807679298587, -0.0279837694168599,
    -0.1870348117190931, 0.0308413818355607, 0.0328830116668852, -0.0105974017850690};

inline constexpr std::array<double, 8> daub_high() {
    std::array<double, 8> g{};
    for (std::size_t n = 0; n < 8; ++n) g[n] = ((n % 2) ? -1.0 : 1.0) * kDaubLow[7 - n];
    return g;
}
inline constexpr std::array<double, 8> kDaubHigh = daub_high();

/// Periodic single-level analysis of `n` samples read with `stride`.
/// Writes n/2 approximation then n/2 detail samples back in place.
inline void dwt_1d(double* x, std::size_t n, std::size_t stride, std::vector<double>& tmp) {
    tmp.assign(n, 0.0);
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t t = 0; t < 8; ++t) {
            double v = x[((2 * k + t) % n) * stride];
            a += kDaubLow[t] * v;
            d += kDaubHigh[t] * v;
        }
        tmp[k] = a;
        tmp[half + k] = d;
    }
    for (std::size_t i = 0; i < n; ++i) x[i * stride] = tmp[i];
}

inline void idwt_1d(double* x, std::size_t n, std::size_t stride, std::vector<double>& tmp) {
    tmp.assign(n, 0.0);
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < half; ++k) {
        const double a = x[k * stride], d = x[(half + k) * stride];
        for (std::size_t t = 0; t < 8; ++t) tmp[(2 * k + t) % n] += kDaubLow[t] * a + kDaubHigh[t] * d;
    }
    for (std::size_t i = 0; i < n; ++i) x[i * stride] = tmp[i];
}

/// Mallat-layout buffer of a 2-D periodic wavelet transform.
struct WaveletBuffer {
    std::size_t width = 0, height = 0;
    std::vector<double> data;
    double* at(std::size_t x, std::size_t y) { return data.data() + y * width + x; }
};

inline void dwt_2d(WaveletBuffer& buf, int levels) {
    std::vector<double> tmp;
    std::size_t w = buf.width, h = buf.height;
    for (int l = 0; l < levels; ++l) {
        for (std::size_t y = 0; y < h; ++y) dwt_1d(buf.at(0, y), w, 1, tmp);
        for (std::size_t x = 0; x < w; ++x) dwt_1d(buf.at(x, 0), h, buf.width, tmp);
        w /= 2;
        h /= 2;
    }
}

inline void idwt_2d(WaveletBuffer& buf, int levels) {
    std::vector<double> tmp;
    for (int l = levels - 1; l >= 0; --l) {
        std::size_t w = buf.width >> l, h = buf.height >> l;
        for (std::size_t x = 0; x < w; ++x) idwt_1d(buf.at(x, 0), h, buf.width, tmp);
        for (std::size_t y = 0; y < h; ++y) idwt_1d(buf.at(0, y), w, 1, tmp);
    }
}

/// Local Wiener shrinkage of one subband in place. The signal variance is
/// the minimum over square windows of mean(c^2) - sigma0^2, floored at 0.
inline void wiener_shrink_subband(WaveletBuffer& buf, std::size_t x0, std::size_t y0, std::size_t w,
                                  std::size_t h, double noise_variance) {
    constexpr std::array<long, 4> kWindows = {3, 5, 7, 9};
    constexpr long kPad = 4;
    const long pw = static_cast<long>(w) + 2 * kPad + 1, ph = static_cast<long>(h) + 2 * kPad + 1;
    // Summed-area table of c^2 over the symmetrically extended subband.
    std::vector<double> sat(static_cast<std::size_t>(pw * ph), 0.0);
    for (long y = 1; y < ph; ++y) {
        double row_sum = 0.0;
        const std::size_t sy = mirror_index(y - 1 - kPad, static_cast<long>(h));
        for (long x = 1; x < pw; ++x) {
            const std::size_t sx = mirror_index(x - 1 - kPad, static_cast<long>(w));
            const double c = *buf.at(x0 + sx, y0 + sy);
            row_sum += c * c;
            sat[y * pw + x] = sat[(y - 1) * pw + x] + row_sum;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double signal = std::numeric_limits<double>::infinity();
            for (long win : kWindows) {
                const long r = win / 2;
                const long ax = static_cast<long>(x) + kPad - r, ay = static_cast<long>(y) + kPad - r;
                const long bx = ax + win, by = ay + win;
                const double sum = sat[by * pw + bx] - sat[ay * pw + bx] - sat[by * pw + ax] + sat[ay * pw + ax];
                signal = std::min(signal, std::max(0.0, sum / static_cast<double>(win * win) - noise_variance));
            }
            double& c = *buf.at(x0 + x, y0 + y);
            c *= signal / (signal + noise_variance);
        }
    }
}

} // namespace detail

inline constexpr int kWaveletLevels = 4;
inline constexpr std::size_t kWaveletMinSize = 16;

/// Wavelet-domain Wiener denoiser. The plane is symmetrically extended by a
/// margin (a multiple of 2^levels, so the decimation grid stays anchored to
/// the image origin) to a size divisible by 2^levels before the periodic
/// transform; the extension is cropped away afterwards.
inline ImagePlane wavelet_denoise(const ImagePlane& plane, double noise_variance = kDefaultNoiseVariance) {
    if (!(noise_variance > 0) || !std::isfinite(noise_variance))
        throw ArgumentError("wavelet_denoise: noise_variance must be > 0");
    if (plane.width() < kWaveletMinSize || plane.height() < kWaveletMinSize)
        throw SizeError("wavelet_denoise: plane must be at least 16x16");

    constexpr std::size_t block = std::size_t{1} << kWaveletLevels;
    constexpr std::size_t margin = 2 * block;
    auto padded = [&](std::size_t n) { return (n + 2 * margin + block - 1) / block * block; };

    detail::WaveletBuffer buf;
    buf.width = padded(plane.width());
    buf.height = padded(plane.height());
    buf.data.resize(buf.width * buf.height);
    const long w = static_cast<long>(plane.width()), h = static_cast<long>(plane.height());
    for (std::size_t y = 0; y < buf.height; ++y) {
        const std::size_t sy = detail::mirror_index(static_cast<long>(y) - static_cast<long>(margin), h);
        for (std::size_t x = 0; x < buf.width; ++x)
            *buf.at(x, y) = plane(detail::mirror_index(static_cast<long>(x) - static_cast<long>(margin), w), sy);
    }

    detail::dwt_2d(buf, kWaveletLevels);
    for (int l = 0; l < kWaveletLevels; ++l) {
        const std::size_t sw = buf.width >> (l + 1), sh = buf.height >> (l + 1);
        detail::wiener_shrink_subband(buf, sw, 0, sw, sh, noise_variance);  // horizontal detail
        detail::wiener_shrink_subband(buf, 0, sh, sw, sh, noise_variance);  // vertical detail
        detail::wiener_shrink_subband(buf, sw, sh, sw, sh, noise_variance); // diagonal detail
    }
    detail::idwt_2d(buf, kWaveletLevels);

    ImagePlane out(plane.width(), plane.height());
    for (std::size_t y = 0; y < plane.height(); ++y)
        for (std::size_t x = 0; x < plane.width(); ++x) out(x, y) = *buf.at(x + margin, y + margin);
    return out;
}

/// Normalized 1-D Gaussian kernel truncated at +-ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw ArgumentError("gaussian_kernel: sigma must be > 0");
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Separable Gaussian blur with symmetric (half-sample) boundary extension.
inline ImagePlane gaussian_denoise(const ImagePlane& plane, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const long radius = static_cast<long>(k.size() / 2);
    const long w = static_cast<long>(plane.width()), h = static_cast<long>(plane.height());
    ImagePlane tmp(plane.width(), plane.height()), out(plane.width(), plane.height());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] * plane(detail::mirror_index(x + i, w), y);
            tmp(x, y) = acc;
        }
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] * tmp(x, detail::mirror_index(y + i, h));
            out(x, y) = acc;
        }
    return out;
}

inline ImagePlane denoise(const ImagePlane& plane, const DenoiserSpec& spec) {
    spec.validate();
    return spec.kind == DenoiserKind::wavelet ? wavelet_denoise(plane, spec.noise_variance)
                                              : gaussian_denoise(plane, spec.sigma);
}

} // namespace prnu
