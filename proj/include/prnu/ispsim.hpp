// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Synthetic sensor with a planted PRNU pattern, synthetic scenes, Bayer
/// capture with shot and read noise, and configurable development pipelines
/// (demosaic, white balance, tone curve, denoise, sharpen, crop).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/image.hpp"

namespace prnu {

inline constexpr std::size_t kMinSensorSize = 64;
inline constexpr double kDefaultPrnuStrength = 0.02;
inline constexpr double kDefaultReadNoiseStd = 0.002;
inline constexpr double kDefaultShotNoiseScale = 2e-4;

struct SensorProfile {
    std::string id;
    std::size_t width = 0, height = 0;
    ImagePlane prnu;
    double strength = kDefaultPrnuStrength;
    double read_noise_std = kDefaultReadNoiseStd;
    double shot_noise_scale = kDefaultShotNoiseScale;
    std::uint64_t seed = 0;

    friend bool operator==(const SensorProfile&, const SensorProfile&) = default;
};

struct SensorParams {
    double strength = kDefaultPrnuStrength;
    double read_noise_std = kDefaultReadNoiseStd;
    double shot_noise_scale = kDefaultShotNoiseScale;
};

/// PRNU drawn i.i.d. zero-mean Gaussian with standard deviation `strength`,
/// then mean-subtracted.
inline SensorProfile synth_sensor(std::size_t width, std::size_t height, const SensorParams& params,
                                  std::uint64_t seed, std::string id = "sensor") {
    if (width < kMinSensorSize || height < kMinSensorSize)
        throw ArgumentError("synth_sensor: dimensions must be >= 64");
    if (!(params.strength > 0.0 && params.strength <= 0.1))
        throw ArgumentError("synth_sensor: strength must lie in (0, 0.1]");
    if (!(params.read_noise_std >= 0.0) || !(params.shot_noise_scale >= 0.0))
        throw ArgumentError("synth_sensor: noise parameters must be >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, params.strength);
    ImagePlane k(width, height);
    double mean = 0.0;
    for (double& v : k.samples()) {
        v = gauss(rng);
        mean += v;
    }
    mean /= static_cast<double>(k.size());
    for (double& v : k.samples()) v -= mean;
    return {std::move(id), width, height, std::move(k), params.strength, params.read_noise_std,
            params.shot_noise_scale, seed};
}

// ---------------------------------------------------------------------------
// Scenes

enum class SceneKind { flat, gradient, texture };

struct SceneSpec {
    SceneKind kind = SceneKind::texture;
    double level = 0.5;      ///< flat
    double smoothness = 3.0; ///< texture: Gaussian low-pass sigma in pixels
};

namespace detail {

inline ImagePlane noise_plane(std::size_t w, std::size_t h, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ImagePlane p(w, h);
    for (double& v : p.samples()) v = gauss(rng);
    return p;
}

inline void stretch(ImagePlane& p, double lo, double hi) {
    auto [mn, mx] = std::minmax_element(p.samples().begin(), p.samples().end());
    const double a = *mn, b = *mx;
    const double scale = b > a ? (hi - lo) / (b - a) : 0.0;
    for (double& v : p.samples()) v = b > a ? std::clamp(lo + (v - a) * scale, lo, hi) : 0.5 * (lo + hi);
}

} // namespace detail

/// flat: every channel equals `level`. gradient: per-channel linear ramp,
/// minimal at (0,0) and maximal at (w-1,h-1). texture: band-limited seeded
/// noise stretched to [0.1, 0.9], with a shared luminance component and
/// weaker per-channel chroma.
inline ColorImage synth_scene(std::size_t width, std::size_t height, const SceneSpec& spec, std::uint64_t seed) {
    if (width < kMinSensorSize || height < kMinSensorSize) throw ArgumentError("synth_scene: dimensions must be >= 64");
    switch (spec.kind) {
    case SceneKind::flat: {
        if (!(spec.level >= 0.0 && spec.level <= 1.0)) throw ArgumentError("synth_scene: flat level outside [0,1]");
        ImagePlane p(width, height, spec.level);
        return ColorImage(p, p, p);
    }
    case SceneKind::gradient: {
        constexpr std::array<std::array<double, 2>, 3> ranges = {{{0.15, 0.85}, {0.1, 0.9}, {0.2, 0.7}}};
        std::array<ImagePlane, 3> ch = {ImagePlane(width, height), ImagePlane(width, height),
                                        ImagePlane(width, height)};
        const double norm = static_cast<double>(width - 1 + height - 1);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < height; ++y)
                for (std::size_t x = 0; x < width; ++x)
                    ch[c](x, y) = ranges[c][0] + (ranges[c][1] - ranges[c][0]) * static_cast<double>(x + y) / norm;
        return ColorImage(std::move(ch[0]), std::move(ch[1]), std::move(ch[2]));
    }
    case SceneKind::texture: {
        if (!(spec.smoothness > 0.0)) throw ArgumentError("synth_scene: smoothness must be > 0");
        std::mt19937_64 rng(seed);
        ImagePlane base = gaussian_denoise(detail::noise_plane(width, height, rng), spec.smoothness);
        detail::stretch(base, 0.0, 1.0);
        std::array<ImagePlane, 3> ch;
        for (std::size_t c = 0; c < 3; ++c) {
            ImagePlane chroma = gaussian_denoise(detail::noise_plane(width, height, rng), 2.0 * spec.smoothness);
            detail::stretch(chroma, 0.0, 1.0);
            ImagePlane mix(width, height);
            for (std::size_t i = 0; i < mix.size(); ++i)
                mix.samples()[i] = 0.75 * base.samples()[i] + 0.25 * chroma.samples()[i];
            detail::stretch(mix, 0.1, 0.9);
            ch[c] = std::move(mix);
        }
        return ColorImage(std::move(ch[0]), std::move(ch[1]), std::move(ch[2]));
    }
    }
    throw ArgumentError("synth_scene: unknown scene kind");
}

// ---------------------------------------------------------------------------
// Capture

enum class CfaColor { red, green, blue };

/// RGGB: red at (even, even), blue at (odd, odd), green elsewhere.
inline constexpr CfaColor cfa_color(std::size_t x, std::size_t y) noexcept {
    if (y % 2 == 0) return x % 2 == 0 ? CfaColor::red : CfaColor::green;
    return x % 2 == 0 ? CfaColor::green : CfaColor::blue;
}

inline ImagePlane mosaic(const ColorImage& scene) {
    ImagePlane raw(scene.width(), scene.height());
    for (std::size_t y = 0; y < raw.height(); ++y)
        for (std::size_t x = 0; x < raw.width(); ++x) {
            switch (cfa_color(x, y)) {
            case CfaColor::red: raw(x, y) = scene.r(x, y); break;
            case CfaColor::green: raw(x, y) = scene.g(x, y); break;
            case CfaColor::blue: raw(x, y) = scene.b(x, y); break;
            }
        }
    return raw;
}

/// raw = bayer * (1 + k) + shot + read, clipped to [0,1]; shot noise has
/// variance bayer * shot_noise_scale.
inline ImagePlane capture(const ColorImage& scene, const SensorProfile& sensor, std::uint64_t seed) {
    if (scene.width() != sensor.width || scene.height() != sensor.height)
        throw ShapeError("capture: scene and sensor dimensions differ");
    ImagePlane raw = mosaic(scene);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const bool noisy = sensor.read_noise_std > 0.0 || sensor.shot_noise_scale > 0.0;
    auto out = raw.samples();
    auto k = sensor.prnu.samples();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double b = out[i];
        double v = b * (1.0 + k[i]);
        if (noisy) {
            v += std::sqrt(std::max(b, 0.0) * sensor.shot_noise_scale) * gauss(rng);
            v += sensor.read_noise_std * gauss(rng);
        }
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Development

enum class DemosaicKind { nearest, bilinear, edge_directed };
enum class ToneKind { gamma, scurve };

struct ToneCurve {
    ToneKind kind = ToneKind::gamma;
    double value = 2.2; ///< gamma exponent, or s-curve strength

    double operator()(double x) const {
        x = std::clamp(x, 0.0, 1.0);
        if (kind == ToneKind::gamma) return std::pow(x, 1.0 / value);
        if (value <= 0.0) return x;
        auto sig = [&](double t) { return 1.0 / (1.0 + std::exp(-value * t)); };
        const double lo = sig(-0.5), hi = sig(0.5);
        return (sig(x - 0.5) - lo) / (hi - lo);
    }
    friend bool operator==(const ToneCurve&, const ToneCurve&) = default;
};

struct PipelineConfig {
    std::string id;
    DemosaicKind demosaic = DemosaicKind::bilinear;
    double r_gain = 1.0, b_gain = 1.0;
    ToneCurve tone;
    std::optional<DenoiserSpec> denoise;
    std::optional<double> sharpen;
    std::size_t crop_dx = 0, crop_dy = 0;

    void validate() const {
        if (id.empty()) throw ConfigError("pipeline: id must not be empty");
        if (!(r_gain > 0.0) || !(b_gain > 0.0)) throw ConfigError("pipeline " + id + ": gains must be > 0");
        if (tone.kind == ToneKind::gamma && !(tone.value > 0.0))
            throw ConfigError("pipeline " + id + ": gamma must be > 0");
        if (tone.kind == ToneKind::scurve && !(tone.value >= 0.0))
            throw ConfigError("pipeline " + id + ": s-curve strength must be >= 0");
        if (sharpen && !(*sharpen >= 0.0)) throw ConfigError("pipeline " + id + ": sharpen amount must be >= 0");
        if (denoise) {
            try {
                denoise->validate();
            } catch (const ArgumentError& e) {
                throw ConfigError("pipeline " + id + ": " + e.what());
            }
        }
    }

    /// Output dimensions for a raw of the given size.
    std::pair<std::size_t, std::size_t> output_size(std::size_t w, std::size_t h) const {
        if (crop_dx + 2 > w || crop_dy + 2 > h) throw ConfigError("pipeline " + id + ": crop offset exceeds image");
        return {(w - crop_dx) & ~std::size_t{1}, (h - crop_dy) & ~std::size_t{1}};
    }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

namespace detail {

/// Reflection without edge repetition; keeps CFA parity.
inline std::size_t reflect101(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    long j = i % period;
    if (j < 0) j += period;
    return static_cast<std::size_t>(j < n ? j : period - j);
}

struct RawReader {
    const ImagePlane& raw;
    long w, h;
    double operator()(long x, long y) const { return raw(reflect101(x, w), reflect101(y, h)); }
};

using Kernel5 = std::array<std::array<double, 5>, 5>;

inline double apply(const RawReader& r, long x, long y, const Kernel5& k) {
    double acc = 0.0;
    for (long j = 0; j < 5; ++j)
        for (long i = 0; i < 5; ++i)
            if (k[j][i] != 0.0) acc += k[j][i] * r(x + i - 2, y + j - 2);
    return acc / 8.0;
}

// Gradient-corrected linear interpolation kernels (scaled by 8).
inline constexpr Kernel5 kGreenAtRedBlue = {{{0, 0, -1, 0, 0}, {0, 0, 2, 0, 0}, {-1, 2, 4, 2, -1},
                                             {0, 0, 2, 0, 0}, {0, 0, -1, 0, 0}}};
inline constexpr Kernel5 kChromaAtGreenRow = {{{0, 0, 0.5, 0, 0}, {0, -1, 0, -1, 0}, {-1, 4, 5, 4, -1},
                                               {0, -1, 0, -1, 0}, {0, 0, 0.5, 0, 0}}};
inline constexpr Kernel5 kChromaAtGreenCol = {{{0, 0, -1, 0, 0}, {0, -1, 4, -1, 0}, {0.5, 0, 5, 0, 0.5},
                                               {0, -1, 4, -1, 0}, {0, 0, -1, 0, 0}}};
inline constexpr Kernel5 kChromaAtChroma = {{{0, 0, -1.5, 0, 0}, {0, 2, 0, 2, 0}, {-1.5, 0, 6, 0, -1.5},
                                             {0, 2, 0, 2, 0}, {0, 0, -1.5, 0, 0}}};

inline ColorImage demosaic_nearest(const ImagePlane& raw) {
    const RawReader r{raw, static_cast<long>(raw.width()), static_cast<long>(raw.height())};
    ImagePlane R(raw.width(), raw.height()), G(raw.width(), raw.height()), B(raw.width(), raw.height());
    for (long y = 0; y < r.h; ++y)
        for (long x = 0; x < r.w; ++x) {
            const long bx = x & ~1L, by = y & ~1L;
            R(x, y) = r(bx, by);
            B(x, y) = r(bx + 1, by + 1);
            switch (cfa_color(x, y)) {
            case CfaColor::green: G(x, y) = r(x, y); break;
            case CfaColor::red: G(x, y) = r(x + 1, y); break;
            case CfaColor::blue: G(x, y) = r(x - 1, y); break;
            }
        }
    return ColorImage(std::move(R), std::move(G), std::move(B));
}

inline ColorImage demosaic_bilinear(const ImagePlane& raw) {
    const RawReader r{raw, static_cast<long>(raw.width()), static_cast<long>(raw.height())};
    ImagePlane R(raw.width(), raw.height()), G(raw.width(), raw.height()), B(raw.width(), raw.height());
    for (long y = 0; y < r.h; ++y)
        for (long x = 0; x < r.w; ++x) {
            const double c = r(x, y);
            const double cross = 0.25 * (r(x - 1, y) + r(x + 1, y) + r(x, y - 1) + r(x, y + 1));
            const double diag = 0.25 * (r(x - 1, y - 1) + r(x + 1, y - 1) + r(x - 1, y + 1) + r(x + 1, y + 1));
            const double horiz = 0.5 * (r(x - 1, y) + r(x + 1, y));
            const double vert = 0.5 * (r(x, y - 1) + r(x, y + 1));
            switch (cfa_color(x, y)) {
            case CfaColor::red: R(x, y) = c; G(x, y) = cross; B(x, y) = diag; break;
            case CfaColor::blue: B(x, y) = c; G(x, y) = cross; R(x, y) = diag; break;
            case CfaColor::green:
                G(x, y) = c;
                if (y % 2 == 0) { R(x, y) = horiz; B(x, y) = vert; }
                else { B(x, y) = horiz; R(x, y) = vert; }
                break;
            }
        }
    return ColorImage(std::move(R), std::move(G), std::move(B));
}

inline ColorImage demosaic_edge_directed(const ImagePlane& raw) {
    const RawReader r{raw, static_cast<long>(raw.width()), static_cast<long>(raw.height())};
    ImagePlane R(raw.width(), raw.height()), G(raw.width(), raw.height()), B(raw.width(), raw.height());
    for (long y = 0; y < r.h; ++y)
        for (long x = 0; x < r.w; ++x) {
            const double c = r(x, y);
            switch (cfa_color(x, y)) {
            case CfaColor::red:
                R(x, y) = c;
                G(x, y) = apply(r, x, y, kGreenAtRedBlue);
                B(x, y) = apply(r, x, y, kChromaAtChroma);
                break;
            case CfaColor::blue:
                B(x, y) = c;
                G(x, y) = apply(r, x, y, kGreenAtRedBlue);
                R(x, y) = apply(r, x, y, kChromaAtChroma);
                break;
            case CfaColor::green:
                G(x, y) = c;
                if (y % 2 == 0) {
                    R(x, y) = apply(r, x, y, kChromaAtGreenRow);
                    B(x, y) = apply(r, x, y, kChromaAtGreenCol);
                } else {
                    B(x, y) = apply(r, x, y, kChromaAtGreenRow);
                    R(x, y) = apply(r, x, y, kChromaAtGreenCol);
                }
                break;
            }
        }
    return ColorImage(std::move(R), std::move(G), std::move(B));
}

} // namespace detail

inline ColorImage demosaic(const ImagePlane& raw, DemosaicKind kind) {
    switch (kind) {
    case DemosaicKind::nearest: return detail::demosaic_nearest(raw);
    case DemosaicKind::bilinear: return detail::demosaic_bilinear(raw);
    case DemosaicKind::edge_directed: return detail::demosaic_edge_directed(raw);
    }
    throw ConfigError("demosaic: unknown algorithm");
}

inline constexpr double kSharpenSigma = 1.0;

/// demosaic -> white balance -> tone curve -> denoise -> unsharp mask ->
/// clip -> crop. Output dimensions are kept even.
inline ColorImage develop(const ImagePlane& raw, const PipelineConfig& config) {
    config.validate();
    const auto [ow, oh] = config.output_size(raw.width(), raw.height());
    ColorImage img = demosaic(raw, config.demosaic);
    for (double& v : img.r.samples()) v = config.tone(std::clamp(v * config.r_gain, 0.0, 1.0));
    for (double& v : img.g.samples()) v = config.tone(std::clamp(v, 0.0, 1.0));
    for (double& v : img.b.samples()) v = config.tone(std::clamp(v * config.b_gain, 0.0, 1.0));
    for (ImagePlane* ch : {&img.r, &img.g, &img.b}) {
        if (config.denoise) *ch = denoise(*ch, *config.denoise);
        if (config.sharpen && *config.sharpen > 0.0) {
            const ImagePlane blur = gaussian_denoise(*ch, kSharpenSigma);
            auto s = ch->samples();
            auto b = blur.samples();
            for (std::size_t i = 0; i < s.size(); ++i) s[i] += *config.sharpen * (s[i] - b[i]);
        }
        for (double& v : ch->samples()) v = std::clamp(v, 0.0, 1.0);
    }
    if (config.crop_dx == 0 && config.crop_dy == 0 && ow == raw.width() && oh == raw.height()) return img;
    return crop(img, config.crop_dx, config.crop_dy, ow, oh);
}

// ---------------------------------------------------------------------------
// JSON

inline std::string to_string(DemosaicKind k) {
    switch (k) {
    case DemosaicKind::nearest: return "nearest";
    case DemosaicKind::bilinear: return "bilinear";
    case DemosaicKind::edge_directed: return "edge_directed";
    }
    return "?";
}

inline DemosaicKind demosaic_from_string(const std::string& s) {
    if (s == "nearest") return DemosaicKind::nearest;
    if (s == "bilinear") return DemosaicKind::bilinear;
    if (s == "edge_directed") return DemosaicKind::edge_directed;
    throw ConfigError("unknown demosaic id '" + s + "'");
}

inline nlohmann::json to_json(const DenoiserSpec& d) {
    if (d.kind == DenoiserKind::wavelet) return {{"kind", "wavelet"}, {"noise_variance", d.noise_variance}};
    return {{"kind", "gaussian"}, {"sigma", d.sigma}};
}

inline DenoiserSpec denoiser_from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        DenoiserSpec d;
        if (kind == "wavelet") {
            d = DenoiserSpec::wavelet(j.value("noise_variance", kDefaultNoiseVariance));
        } else if (kind == "gaussian") {
            d = DenoiserSpec::gaussian(j.at("sigma").get<double>());
        } else {
            throw ConfigError("unknown denoiser kind '" + kind + "'");
        }
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("denoiser: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
}

/// Parses "wavelet", "wavelet:<variance>" or "gaussian:<sigma>".
inline DenoiserSpec denoiser_from_string(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    std::optional<double> value;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            value = std::stod(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ConfigError("bad denoiser parameter in '" + s + "'");
        }
    }
    DenoiserSpec d;
    if (kind == "wavelet") d = DenoiserSpec::wavelet(value.value_or(kDefaultNoiseVariance));
    else if (kind == "gaussian") d = DenoiserSpec::gaussian(value.value_or(1.0));
    else throw ConfigError("unknown denoiser '" + s + "'");
    try {
        d.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return d;
}

inline nlohmann::json to_json(const PipelineConfig& p) {
    nlohmann::json j = {{"id", p.id},
                        {"demosaic", to_string(p.demosaic)},
                        {"white_balance", {p.r_gain, p.b_gain}},
                        {"tone",
                         {{"kind", p.tone.kind == ToneKind::gamma ? "gamma" : "scurve"},
                          {p.tone.kind == ToneKind::gamma ? "gamma" : "strength", p.tone.value}}},
                        {"crop_offset", {p.crop_dx, p.crop_dy}}};
    j["denoise"] = p.denoise ? to_json(*p.denoise) : nlohmann::json(nullptr);
    j["sharpen"] = p.sharpen ? nlohmann::json(*p.sharpen) : nlohmann::json(nullptr);
    return j;
}

inline PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    try {
        PipelineConfig p;
        p.id = j.at("id").get<std::string>();
        p.demosaic = demosaic_from_string(j.at("demosaic").get<std::string>());
        if (j.contains("white_balance")) {
            const auto wb = j.at("white_balance").get<std::vector<double>>();
            if (wb.size() != 2) throw ConfigError("pipeline " + p.id + ": white_balance needs [r_gain, b_gain]");
            p.r_gain = wb[0];
            p.b_gain = wb[1];
        }
        if (j.contains("tone")) {
            const auto& t = j.at("tone");
            const auto kind = t.at("kind").get<std::string>();
            if (kind == "gamma") p.tone = {ToneKind::gamma, t.value("gamma", 2.2)};
            else if (kind == "scurve") p.tone = {ToneKind::scurve, t.value("strength", 6.0)};
            else throw ConfigError("pipeline " + p.id + ": unknown tone kind '" + kind + "'");
        }
        if (j.contains("denoise") && !j.at("denoise").is_null()) p.denoise = denoiser_from_json(j.at("denoise"));
        if (j.contains("sharpen") && !j.at("sharpen").is_null()) p.sharpen = j.at("sharpen").get<double>();
        if (j.contains("crop_offset")) {
            const auto off = j.at("crop_offset").get<std::vector<long>>();
            if (off.size() != 2 || off[0] < 0 || off[1] < 0)
                throw ConfigError("pipeline " + p.id + ": crop_offset needs two non-negative integers");
            p.crop_dx = static_cast<std::size_t>(off[0]);
            p.crop_dy = static_cast<std::size_t>(off[1]);
        }
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
}

/// Sensor description without the PRNU plane.
inline nlohmann::json to_json(const SensorProfile& s) {
    return {{"id", s.id},
            {"width", s.width},
            {"height", s.height},
            {"strength", s.strength},
            {"read_noise_std", s.read_noise_std},
            {"shot_noise_scale", s.shot_noise_scale},
            {"seed", s.seed}};
}

} // namespace prnu
