// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// The `prnu` command-line tool. run_cli is kept separate from main so the
/// tests can drive it in-process.
///
/// Exit codes: 0 success, 1 domain error, 2 usage error.

#pragma once

#include <glob.h>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "prnu/prnu.hpp"

namespace prnu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Raised for invalid invocations detected after flag parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sorted paths matching a shell pattern; a pattern without wildcards
/// matches only an existing file.
inline std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline std::string fixed(double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

struct EstimateArgs {
    std::string images, denoiser = "wavelet", out, camera, pipeline;
    bool no_saturation_mask = false, whiten = false;
};

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    const auto paths = expand_glob(a.images);
    if (paths.empty()) throw UsageError("no images match '" + a.images + "'");
    DenoiserSpec spec;
    try {
        spec = denoiser_from_string(a.denoiser);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    EstimationOptions opt;
    opt.camera_id = a.camera;
    opt.pipeline_id = a.pipeline;
    if (a.no_saturation_mask) opt.saturation_level = std::nullopt;
    FingerprintAccumulator acc(opt);
    for (const auto& p : paths) {
        const ImagePlane lum = to_luminance(load_image(p));
        acc.add(lum, residual(lum, spec).plane);
    }
    Fingerprint fp = clean_fingerprint(acc.finish());
    if (a.whiten) fp = whiten_fingerprint(std::move(fp));
    save_fingerprint(fp, a.out);
    out << "n_sources=" << fp.n_sources << " width=" << fp.plane.width() << " height=" << fp.plane.height() << "\n";
    return kExitOk;
}

struct MatchArgs {
    std::string image, fingerprint, denoiser = "wavelet";
    std::size_t patch = 0;
    bool json = false;
};

inline int cmd_match(const MatchArgs& a, std::ostream& out) {
    DenoiserSpec spec;
    try {
        spec = denoiser_from_string(a.denoiser);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const Fingerprint fp = load_fingerprint(a.fingerprint);
    const ImagePlane lum = to_luminance(load_image(a.image));
    if (!lum.same_shape(fp.plane))
        throw ShapeError("image is " + std::to_string(lum.width()) + "x" + std::to_string(lum.height()) +
                         " but fingerprint is " + std::to_string(fp.plane.width()) + "x" +
                         std::to_string(fp.plane.height()));
    const NoiseResidual res = residual(lum, spec, a.image);
    std::vector<ScoreRecord> records;
    auto record = [&](std::size_t x, std::size_t y, std::size_t size, PceScore s) {
        ScoreRecord r;
        r.fp_camera = fp.camera_id;
        r.est_pipeline = fp.pipeline_id;
        r.patch_size = size;
        r.x = x;
        r.y = y;
        r.score = s;
        records.push_back(std::move(r));
    };
    if (a.patch == 0) {
        record(0, 0, 0, match_region(lum, res, fp, 0, 0, lum.width(), lum.height()));
    } else {
        for (const auto& p : tile_patches(lum, a.patch).patches)
            record(p.x, p.y, a.patch, match_patch(lum, res, fp, p.x, p.y, a.patch));
    }
    if (a.json) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : records) j.push_back(to_json(r));
        out << j.dump(2) << "\n";
        return kExitOk;
    }
    out << std::left << std::setw(8) << "x" << std::setw(8) << "y" << std::setw(8) << "size" << std::right
        << std::setw(14) << "pce" << std::setw(12) << "shift" << std::setw(14) << "p_value" << "\n";
    for (const auto& r : records) {
        std::ostringstream shift;
        shift << r.score.peak.dx << "," << r.score.peak.dy;
        out << std::left << std::setw(8) << r.x << std::setw(8) << r.y << std::setw(8)
            << (r.patch_size ? std::to_string(r.patch_size) : std::string("full")) << std::right << std::setw(14)
            << fixed(r.score.pce, 2) << std::setw(12) << shift.str() << std::setw(14) << std::setprecision(4)
            << std::scientific << r.score.p_value << std::defaultfloat << "\n";
    }
    return kExitOk;
}

struct AlignArgs {
    std::string a, b;
    std::size_t max_shift = 8;
    bool json = false;
};

inline int cmd_align(const AlignArgs& a, std::ostream& out) {
    const auto fa = load_fingerprint(a.a), fb = load_fingerprint(a.b);
    if (!fa.plane.same_shape(fb.plane)) throw ShapeError("fingerprints differ in dimensions");
    const auto r = align(fa, fb, a.max_shift);
    if (a.json) {
        out << nlohmann::json{{"dx", r.shift.dx}, {"dy", r.shift.dy}, {"ncc", r.correlation}}.dump() << "\n";
    } else {
        out << "shift " << r.shift.dx << " " << r.shift.dy << ", ncc " << fixed(r.correlation, 6) << "\n";
    }
    return kExitOk;
}

struct LocalizeArgs {
    std::string image, fingerprint, out_map, pce_out, json_out, denoiser = "wavelet";
    std::size_t window = kDefaultWindow, stride = kDefaultStride;
    bool median = false;
};

inline int cmd_localize(const LocalizeArgs& a, std::ostream& out) {
    DenoiserSpec spec;
    try {
        spec = denoiser_from_string(a.denoiser);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (a.stride == 0 || a.window == 0) throw UsageError("--window and --stride must be >= 1");
    const Fingerprint fp = load_fingerprint(a.fingerprint);
    const ImagePlane lum = to_luminance(load_image(a.image));
    const HeatMap pce = pce_map(lum, fp, a.window, a.stride, spec);
    const HeatMap prob = probability_map(pce);
    const auto post = a.median ? MapPostprocess::median3 : MapPostprocess::none;
    render_map(prob, a.out_map, post);
    if (!a.pce_out.empty()) render_map(pce, a.pce_out, post);
    if (!a.json_out.empty()) {
        std::ofstream j(a.json_out);
        j << nlohmann::json{{"pce", to_json(pce)}, {"probability", to_json(prob)}}.dump(2) << "\n";
        if (!j) throw IoError("cannot write " + a.json_out);
    }
    double lo = 1.0, hi = 0.0;
    for (double v : prob.values.samples()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    out << "grid " << pce.cols() << "x" << pce.rows() << ", probability min " << fixed(lo, 4) << " max "
        << fixed(hi, 4) << "\n";
    return kExitOk;
}

struct ExperimentArgs {
    std::string config, out;
};

inline int cmd_simulate(const ExperimentArgs& a, std::ostream& out) {
    const auto config = load_experiment(a.config);
    const auto m = build_dataset(config, a.out);
    out << "cameras " << m.cameras.size() << ", pipelines " << m.pipelines.size() << ", images "
        << m.cameras.size() * m.pipelines.size() * (m.estimation_count + m.test_count) << ", manifest "
        << manifest_hash(m) << "\n";
    return kExitOk;
}

inline int cmd_evaluate(const ExperimentArgs& a, std::ostream& out) {
    const auto config = load_experiment(a.config);
    const auto r = evaluate(config);
    report(r, a.out);
    out << summary_table(r);
    return kExitOk;
}

} // namespace detail

/// Runs the tool with `args` (excluding the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"PRNU camera fingerprint toolkit", "prnu"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    detail::EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Estimate a camera fingerprint from images");
    c_est->add_option("--images", est.images, "Image glob (PGM/PPM)")->required();
    c_est->add_option("--denoiser", est.denoiser, "wavelet[:variance] or gaussian:sigma")->capture_default_str();
    c_est->add_option("--out", est.out, "Output fingerprint file")->required();
    c_est->add_option("--camera", est.camera, "Camera id stored in the header");
    c_est->add_option("--pipeline", est.pipeline, "Pipeline id stored in the header");
    c_est->add_flag("--no-saturation-mask", est.no_saturation_mask, "Keep saturated pixels");
    c_est->add_flag("--whiten", est.whiten, "Fourier-domain Wiener whitening after cleaning");

    detail::MatchArgs mat;
    auto* c_mat = app.add_subcommand("match", "Score an image against a fingerprint");
    c_mat->add_option("--image", mat.image)->required();
    c_mat->add_option("--fingerprint", mat.fingerprint)->required();
    c_mat->add_option("--patch", mat.patch, "Patch size; whole image when omitted");
    c_mat->add_option("--denoiser", mat.denoiser)->capture_default_str();
    c_mat->add_flag("--json", mat.json, "Emit score records as JSON");

    detail::AlignArgs ali;
    auto* c_ali = app.add_subcommand("align", "Find the translation between two fingerprints");
    c_ali->add_option("--a", ali.a)->required();
    c_ali->add_option("--b", ali.b)->required();
    c_ali->add_option("--max-shift", ali.max_shift)->capture_default_str();
    c_ali->add_flag("--json", ali.json);

    detail::LocalizeArgs loc;
    auto* c_loc = app.add_subcommand("localize", "Sliding-window tampering map");
    c_loc->add_option("--image", loc.image)->required();
    c_loc->add_option("--fingerprint", loc.fingerprint)->required();
    c_loc->add_option("--window", loc.window)->capture_default_str();
    c_loc->add_option("--stride", loc.stride)->capture_default_str();
    c_loc->add_option("--out-map", loc.out_map, "Tampering probability map (8-bit PGM)")->required();
    c_loc->add_option("--pce-map", loc.pce_out, "Rendered PCE map (8-bit PGM)");
    c_loc->add_option("--json", loc.json_out, "Raw PCE and probability maps");
    c_loc->add_option("--denoiser", loc.denoiser)->capture_default_str();
    c_loc->add_flag("--median3", loc.median, "3x3 median filter before rendering");

    detail::ExperimentArgs sim, eva;
    auto* c_sim = app.add_subcommand("simulate", "Write a simulated multi-pipeline dataset");
    c_sim->add_option("--config", sim.config)->required();
    c_sim->add_option("--out", sim.out)->required();
    auto* c_eva = app.add_subcommand("evaluate", "Run the cross-pipeline evaluation and write reports");
    c_eva->add_option("--config", eva.config)->required();
    c_eva->add_option("--out", eva.out)->required();

    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("prnu");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_est) return detail::cmd_estimate(est, out);
        if (*c_mat) return detail::cmd_match(mat, out);
        if (*c_ali) return detail::cmd_align(ali, out);
        if (*c_loc) return detail::cmd_localize(loc, out);
        if (*c_sim) return detail::cmd_simulate(sim, out);
        if (*c_eva) return detail::cmd_evaluate(eva, out);
    } catch (const UsageError& e) {
        err << "prnu: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "prnu: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "prnu: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

} // namespace prnu::cli
