// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Cross-pipeline evaluation protocol: dataset generation, fingerprint
/// estimation per (camera, pipeline), correlation matrices, patch-wise PCE
/// sweeps, ROC analysis and report emission.
///
/// All randomness flows from ExperimentConfig::seed. Sensor, scene and
/// capture-noise streams are derived from (seed, camera, split, index), so
/// results do not depend on evaluation order or thread count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image.hpp"
#include "prnu/ispsim.hpp"
#include "prnu/matching.hpp"
#include "prnu/parallel.hpp"

namespace prnu {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr double kReportFpr = 0.005;
inline constexpr double kPceThreshold = 50.0;

// ---------------------------------------------------------------------------
// Configuration

struct CameraSpec {
    std::string id;
    SensorParams params;
    std::optional<std::uint64_t> seed;
};

/// Pipeline wavelet-denoise strength used by the default roster.
inline constexpr double kRosterDenoiseSigma = 2.0 / 255.0;

/// Six configurations spanning demosaicing, tone mapping, sharpening,
/// in-pipeline denoising and a cropping de-synchronization. Each non-crop
/// member has a distinct spatial signature; configs that differ only in a
/// pointwise tone curve yield near-identical fingerprints.
inline std::vector<PipelineConfig> default_roster() {
    auto make = [](std::string id, DemosaicKind d, ToneCurve tone) {
        PipelineConfig p;
        p.id = std::move(id);
        p.demosaic = d;
        p.tone = tone;
        return p;
    };
    const ToneCurve gamma{ToneKind::gamma, 2.2}, scurve{ToneKind::scurve, 6.0};
    std::vector<PipelineConfig> roster;
    roster.push_back(make("bilinear-gamma", DemosaicKind::bilinear, gamma));
    roster.push_back(make("edge-scurve-sharp", DemosaicKind::edge_directed, scurve));
    roster.back().sharpen = 1.0;
    roster.push_back(make("nearest-scurve-sharp", DemosaicKind::nearest, scurve));
    roster.back().sharpen = 1.0;
    roster.push_back(make("edge-gamma-denoise", DemosaicKind::edge_directed, gamma));
    roster.back().denoise = DenoiserSpec::wavelet(kRosterDenoiseSigma * kRosterDenoiseSigma);
    roster.push_back(make("nearest-gamma-denoise", DemosaicKind::nearest, gamma));
    roster.back().denoise = DenoiserSpec::wavelet(kRosterDenoiseSigma * kRosterDenoiseSigma);
    roster.push_back(make("bilinear-gamma-crop", DemosaicKind::bilinear, gamma));
    roster.back().crop_dx = 4;
    roster.back().crop_dy = 2;
    return roster;
}

/// True when two configs develop identically apart from their crop offset.
inline bool same_development(const PipelineConfig& a, const PipelineConfig& b) {
    PipelineConfig x = a, y = b;
    x.id = y.id = "";
    x.crop_dx = y.crop_dx = x.crop_dy = y.crop_dy = 0;
    return x == y;
}

struct ExperimentConfig {
    std::uint64_t seed = 20210101;
    std::size_t width = 512, height = 512;
    std::vector<CameraSpec> cameras = {{"cam-a", {}, std::nullopt}, {"cam-b", {}, std::nullopt}};
    std::vector<PipelineConfig> pipelines = default_roster();
    std::size_t estimation_count = 20, test_count = 20;
    std::vector<std::size_t> patch_sizes = {128, 256, 512, 1024};
    DenoiserSpec denoiser = DenoiserSpec::wavelet();
    SceneSpec scene = {SceneKind::texture, 0.5, 8.0};
    std::size_t max_shift = 8;
    std::size_t exclusion_radius = kDefaultExclusionRadius;
    std::filesystem::path output_dir = "prnu-out";

    void validate() const {
        if (cameras.empty()) throw ConfigError("experiment: at least one camera is required");
        if (pipelines.size() < 2) throw ConfigError("experiment: at least two pipelines are required");
        if (estimation_count < 1 || test_count < 1) throw ConfigError("experiment: image counts must be >= 1");
        if (width < kMinSensorSize || height < kMinSensorSize) throw ConfigError("experiment: sensor must be >= 64 px");
        if (patch_sizes.empty()) throw ConfigError("experiment: patch_sizes must not be empty");
        for (auto s : patch_sizes)
            if (s == 0) throw ConfigError("experiment: patch sizes must be >= 1");
        std::vector<std::string> ids;
        for (const auto& c : cameras) ids.push_back(c.id);
        for (const auto& p : pipelines) {
            p.validate();
            p.output_size(width, height);
        }
        auto unique = [](std::vector<std::string> v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) == v.end();
        };
        if (!unique(ids)) throw ConfigError("experiment: duplicate camera id");
        ids.clear();
        for (const auto& p : pipelines) ids.push_back(p.id);
        if (!unique(ids)) throw ConfigError("experiment: duplicate pipeline id");
        for (const auto& c : cameras) {
            if (c.id.empty() || c.id.find('/') != std::string::npos) throw ConfigError("experiment: bad camera id");
            if (!(c.params.strength > 0.0 && c.params.strength <= 0.1))
                throw ConfigError("camera " + c.id + ": strength must lie in (0, 0.1]");
        }
        for (const auto& p : pipelines)
            if (p.id.find('/') != std::string::npos) throw ConfigError("experiment: bad pipeline id " + p.id);
        try {
            denoiser.validate();
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }

    std::uint64_t sensor_seed(std::size_t camera) const {
        return cameras.at(camera).seed.value_or(derive_seed(seed, 1, camera));
    }
    std::size_t pipeline_index(const std::string& id) const {
        for (std::size_t i = 0; i < pipelines.size(); ++i)
            if (pipelines[i].id == id) return i;
        throw StateError("unknown pipeline '" + id + "'");
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& cam : c.cameras) {
        nlohmann::json j = {{"id", cam.id},
                            {"strength", cam.params.strength},
                            {"read_noise_std", cam.params.read_noise_std},
                            {"shot_noise_scale", cam.params.shot_noise_scale}};
        if (cam.seed) j["seed"] = *cam.seed;
        cams.push_back(std::move(j));
    }
    nlohmann::json pipes = nlohmann::json::array();
    for (const auto& p : c.pipelines) pipes.push_back(to_json(p));
    const char* kind = c.scene.kind == SceneKind::flat ? "flat" : c.scene.kind == SceneKind::gradient ? "gradient" : "texture";
    return {{"seed", c.seed},
            {"width", c.width},
            {"height", c.height},
            {"cameras", cams},
            {"pipelines", pipes},
            {"estimation_count", c.estimation_count},
            {"test_count", c.test_count},
            {"patch_sizes", c.patch_sizes},
            {"denoiser", to_json(c.denoiser)},
            {"scene", {{"kind", kind}, {"level", c.scene.level}, {"smoothness", c.scene.smoothness}}},
            {"max_shift", c.max_shift},
            {"exclusion_radius", c.exclusion_radius},
            {"output_dir", c.output_dir.string()}};
}

/// Missing keys take ExperimentConfig defaults; "pipelines": "default"
/// selects the default roster.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        c.seed = j.value("seed", c.seed);
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        if (j.contains("cameras")) {
            c.cameras.clear();
            for (const auto& cj : j.at("cameras")) {
                CameraSpec cam;
                cam.id = cj.at("id").get<std::string>();
                cam.params.strength = cj.value("strength", kDefaultPrnuStrength);
                cam.params.read_noise_std = cj.value("read_noise_std", kDefaultReadNoiseStd);
                cam.params.shot_noise_scale = cj.value("shot_noise_scale", kDefaultShotNoiseScale);
                if (cj.contains("seed")) cam.seed = cj.at("seed").get<std::uint64_t>();
                c.cameras.push_back(std::move(cam));
            }
        }
        if (j.contains("pipelines") && !(j.at("pipelines").is_string() && j.at("pipelines") == "default")) {
            c.pipelines.clear();
            for (const auto& pj : j.at("pipelines")) c.pipelines.push_back(pipeline_from_json(pj));
        }
        c.estimation_count = j.value("estimation_count", c.estimation_count);
        c.test_count = j.value("test_count", c.test_count);
        if (j.contains("patch_sizes")) c.patch_sizes = j.at("patch_sizes").get<std::vector<std::size_t>>();
        if (j.contains("denoiser")) c.denoiser = denoiser_from_json(j.at("denoiser"));
        if (j.contains("scene")) {
            const auto& s = j.at("scene");
            const auto kind = s.value("kind", std::string("texture"));
            if (kind == "flat") c.scene.kind = SceneKind::flat;
            else if (kind == "gradient") c.scene.kind = SceneKind::gradient;
            else if (kind == "texture") c.scene.kind = SceneKind::texture;
            else throw ConfigError("unknown scene kind '" + kind + "'");
            c.scene.level = s.value("level", c.scene.level);
            c.scene.smoothness = s.value("smoothness", c.scene.smoothness);
        }
        c.max_shift = j.value("max_shift", c.max_shift);
        c.exclusion_radius = j.value("exclusion_radius", c.exclusion_radius);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("experiment config " + path.string() + ": " + e.what());
    }
    return experiment_from_json(j);
}

// ---------------------------------------------------------------------------
// Image sources

enum class Split { estimation = 0, test = 1 };

inline std::string capture_id(std::size_t camera, Split split, std::size_t index) {
    std::ostringstream s;
    s << "c" << camera << (split == Split::estimation ? "-est-" : "-test-") << std::setw(3) << std::setfill('0')
      << index;
    return s.str();
}

/// Developed images for one capture, one per pipeline in config order.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual std::vector<ColorImage> developed(std::size_t camera, Split split, std::size_t index) const = 0;
};

/// Generates captures on demand from the experiment seed.
class SimulatedSource : public ImageSource {
public:
    explicit SimulatedSource(ExperimentConfig config) : config_(std::move(config)) {
        config_.validate();
        for (std::size_t c = 0; c < config_.cameras.size(); ++c)
            sensors_.push_back(synth_sensor(config_.width, config_.height, config_.cameras[c].params,
                                            config_.sensor_seed(c), config_.cameras[c].id));
    }

    const ExperimentConfig& config() const noexcept { return config_; }
    const std::vector<SensorProfile>& sensors() const noexcept { return sensors_; }

    ImagePlane raw(std::size_t camera, Split split, std::size_t index) const {
        const auto stream = static_cast<std::uint64_t>(split) * 1'000'000 + index;
        const auto scene = synth_scene(config_.width, config_.height, config_.scene,
                                       derive_seed(config_.seed, 2, camera, stream));
        return capture(scene, sensors_.at(camera), derive_seed(config_.seed, 3, camera, stream));
    }

    std::vector<ColorImage> developed(std::size_t camera, Split split, std::size_t index) const override {
        const ImagePlane r = raw(camera, split, index);
        std::vector<ColorImage> out;
        out.reserve(config_.pipelines.size());
        for (const auto& p : config_.pipelines) out.push_back(develop(r, p));
        return out;
    }

private:
    ExperimentConfig config_;
    std::vector<SensorProfile> sensors_;
};

// ---------------------------------------------------------------------------
// Dataset on disk

struct ManifestImage {
    std::string path; ///< relative to the dataset root
    std::string capture_id;
    std::string checksum; ///< FNV-1a 64 of the file bytes, hex
};

struct ManifestEntry {
    std::string camera, pipeline;
    std::vector<ManifestImage> estimation, test;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    std::size_t width = 0, height = 0;
    std::vector<std::string> cameras, pipelines;
    std::size_t estimation_count = 0, test_count = 0;
    std::vector<ManifestEntry> entries; ///< camera-major, pipeline-minor

    const ManifestEntry& entry(std::size_t camera, std::size_t pipeline) const {
        return entries.at(camera * pipelines.size() + pipeline);
    }
};

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string file_checksum(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
}

inline nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json entries = nlohmann::json::array();
    auto images = [](const std::vector<ManifestImage>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& i : v) a.push_back({{"path", i.path}, {"capture_id", i.capture_id}, {"checksum", i.checksum}});
        return a;
    };
    for (const auto& e : m.entries)
        entries.push_back({{"camera", e.camera},
                           {"pipeline", e.pipeline},
                           {"estimation", images(e.estimation)},
                           {"test", images(e.test)}});
    return {{"seed", m.seed},
            {"width", m.width},
            {"height", m.height},
            {"cameras", m.cameras},
            {"pipelines", m.pipelines},
            {"estimation_count", m.estimation_count},
            {"test_count", m.test_count},
            {"entries", entries}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    try {
        DatasetManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.width = j.at("width").get<std::size_t>();
        m.height = j.at("height").get<std::size_t>();
        m.cameras = j.at("cameras").get<std::vector<std::string>>();
        m.pipelines = j.at("pipelines").get<std::vector<std::string>>();
        m.estimation_count = j.at("estimation_count").get<std::size_t>();
        m.test_count = j.at("test_count").get<std::size_t>();
        auto images = [](const nlohmann::json& a) {
            std::vector<ManifestImage> v;
            for (const auto& i : a)
                v.push_back({i.at("path").get<std::string>(), i.at("capture_id").get<std::string>(),
                             i.at("checksum").get<std::string>()});
            return v;
        };
        for (const auto& e : j.at("entries"))
            m.entries.push_back({e.at("camera").get<std::string>(), e.at("pipeline").get<std::string>(),
                                 images(e.at("estimation")), images(e.at("test"))});
        if (m.entries.size() != m.cameras.size() * m.pipelines.size())
            throw FormatError("manifest: entry count does not match cameras x pipelines");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

inline std::string manifest_hash(const DatasetManifest& m) { return hex64(fnv1a64(to_json(m).dump())); }

/// Captures E + T raws per camera once, develops each through every
/// pipeline and writes 16-bit PPMs plus manifest.json, sensors.json and the
/// ground-truth PRNU of every camera.
inline DatasetManifest build_dataset(const ExperimentConfig& config, const std::filesystem::path& root) {
    SimulatedSource source(config);
    DatasetManifest m;
    m.seed = config.seed;
    m.width = config.width;
    m.height = config.height;
    for (const auto& c : config.cameras) m.cameras.push_back(c.id);
    for (const auto& p : config.pipelines) m.pipelines.push_back(p.id);
    m.estimation_count = config.estimation_count;
    m.test_count = config.test_count;
    for (const auto& c : m.cameras)
        for (const auto& p : m.pipelines) m.entries.push_back({c, p, {}, {}});

    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());

    struct Job {
        std::size_t camera;
        Split split;
        std::size_t index;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < m.cameras.size(); ++c) {
        for (std::size_t i = 0; i < config.estimation_count; ++i) jobs.push_back({c, Split::estimation, i});
        for (std::size_t i = 0; i < config.test_count; ++i) jobs.push_back({c, Split::test, i});
    }
    // Slot per (job, pipeline) so the manifest is independent of scheduling.
    std::vector<ManifestImage> written(jobs.size() * m.pipelines.size());
    parallel_for(jobs.size(), [&](std::size_t n) {
        const Job& job = jobs[n];
        const auto images = source.developed(job.camera, job.split, job.index);
        const std::string id = capture_id(job.camera, job.split, job.index);
        for (std::size_t p = 0; p < images.size(); ++p) {
            std::ostringstream rel;
            rel << "images/" << m.cameras[job.camera] << "/" << m.pipelines[p] << "/"
                << (job.split == Split::estimation ? "est_" : "test_") << std::setw(3) << std::setfill('0')
                << job.index << ".ppm";
            save_ppm(images[p], root / rel.str(), 16);
            written[n * m.pipelines.size() + p] = {rel.str(), id, file_checksum(root / rel.str())};
        }
    });
    for (std::size_t n = 0; n < jobs.size(); ++n)
        for (std::size_t p = 0; p < m.pipelines.size(); ++p) {
            auto& e = m.entries[jobs[n].camera * m.pipelines.size() + p];
            (jobs[n].split == Split::estimation ? e.estimation : e.test).push_back(written[n * m.pipelines.size() + p]);
        }

    nlohmann::json sensors = nlohmann::json::array();
    for (const auto& s : source.sensors()) {
        sensors.push_back(to_json(s));
        save_fingerprint({s.prnu, s.id, "groundtruth", 1}, root / "groundtruth" / (s.id + ".prnu"));
    }
    std::ofstream(root / "sensors.json") << sensors.dump(2) << "\n";
    std::ofstream(root / "config.json") << to_json(config).dump(2) << "\n";
    std::ofstream out(root / "manifest.json");
    out << to_json(m).dump(2) << "\n";
    if (!out) throw IoError("cannot write manifest in " + root.string());
    return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& root) {
    std::ifstream in(root / "manifest.json");
    if (!in) throw IoError("cannot open " + (root / "manifest.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    return manifest_from_json(j);
}

/// Reads developed images written by build_dataset.
class ManifestSource : public ImageSource {
public:
    ManifestSource(DatasetManifest manifest, std::filesystem::path root)
        : manifest_(std::move(manifest)), root_(std::move(root)) {}

    const DatasetManifest& manifest() const noexcept { return manifest_; }

    std::vector<ColorImage> developed(std::size_t camera, Split split, std::size_t index) const override {
        std::vector<ColorImage> out;
        for (std::size_t p = 0; p < manifest_.pipelines.size(); ++p) {
            const auto& e = manifest_.entry(camera, p);
            const auto& list = split == Split::estimation ? e.estimation : e.test;
            out.push_back(load_image(root_ / list.at(index).path));
        }
        return out;
    }

private:
    DatasetManifest manifest_;
    std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Fingerprints

/// Cleaned fingerprints per (camera, pipeline), zero-padded on the right and
/// bottom to sensor size. The halves split the estimation images by parity
/// of their index.
struct FingerprintSet {
    std::vector<std::string> cameras, pipelines;
    std::vector<Fingerprint> full, half_a, half_b;

    std::size_t slot(std::size_t camera, std::size_t pipeline) const { return camera * pipelines.size() + pipeline; }
    const Fingerprint& at(std::size_t camera, std::size_t pipeline) const { return full.at(slot(camera, pipeline)); }

    std::vector<Fingerprint> for_camera(std::size_t camera, const std::vector<Fingerprint>& which) const {
        return {which.begin() + static_cast<long>(slot(camera, 0)),
                which.begin() + static_cast<long>(slot(camera, 0) + pipelines.size())};
    }
};

inline FingerprintSet estimate_fingerprints(const ImageSource& source, const ExperimentConfig& config) {
    config.validate();
    const std::size_t P = config.pipelines.size(), C = config.cameras.size();
    FingerprintSet set;
    for (const auto& c : config.cameras) set.cameras.push_back(c.id);
    for (const auto& p : config.pipelines) set.pipelines.push_back(p.id);

    // One accumulator pair per (camera, pipeline); images are processed in
    // index order within each slot so the pairwise tree is fixed.
    std::vector<Fingerprint> full(C * P), ha(C * P), hb(C * P);
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<FingerprintAccumulator> acc_a, acc_b;
        for (std::size_t p = 0; p < P; ++p) {
            EstimationOptions opt;
            opt.camera_id = config.cameras[c].id;
            opt.pipeline_id = config.pipelines[p].id;
            acc_a.emplace_back(opt);
            acc_b.emplace_back(opt);
        }
        for (std::size_t i = 0; i < config.estimation_count; ++i) {
            const auto images = source.developed(c, Split::estimation, i);
            std::vector<ImagePlane> lum(P), res(P);
            parallel_for(P, [&](std::size_t p) {
                lum[p] = to_luminance(images[p]);
                res[p] = residual(lum[p], config.denoiser).plane;
            });
            for (std::size_t p = 0; p < P; ++p) (i % 2 == 0 ? acc_a : acc_b)[p].add(lum[p], res[p]);
        }
        for (std::size_t p = 0; p < P; ++p) {
            auto finish = [&](const Fingerprint& raw) {
                Fingerprint f = clean_fingerprint(raw);
                f.plane = pad_to(f.plane, config.width, config.height);
                return f;
            };
            Fingerprint a = acc_a[p].finish();
            ha[c * P + p] = finish(a);
            if (acc_b[p].count() > 0) {
                Fingerprint b = acc_b[p].finish();
                hb[c * P + p] = finish(b);
                FingerprintAccumulator merged = acc_a[p];
                merged.merge(acc_b[p]);
                full[c * P + p] = finish(merged.finish());
            } else {
                hb[c * P + p] = ha[c * P + p];
                full[c * P + p] = ha[c * P + p];
            }
        }
    }
    set.full = std::move(full);
    set.half_a = std::move(ha);
    set.half_b = std::move(hb);
    return set;
}

// ---------------------------------------------------------------------------
// Correlation matrices

struct CorrelationMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> ncc;
    std::vector<std::vector<Shift>> shift;
};

/// Post-alignment NCC for all pairs. Computed once per unordered pair and
/// mirrored (shift negated), so the matrix is symmetric with unit diagonal.
inline CorrelationMatrix correlation_matrix(const std::vector<Fingerprint>& fps, std::size_t max_shift) {
    if (fps.size() < 2) throw ArgumentError("correlation_matrix: need at least two fingerprints");
    for (const auto& f : fps)
        if (!f.plane.same_shape(fps.front().plane)) throw ShapeError("correlation_matrix: dimension mismatch");
    const std::size_t n = fps.size();
    CorrelationMatrix m;
    for (const auto& f : fps) m.ids.push_back(f.pipeline_id);
    m.ncc.assign(n, std::vector<double>(n, 1.0));
    m.shift.assign(n, std::vector<Shift>(n));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<Alignment> results(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        results[k] = align(fps[pairs[k].first].plane, fps[pairs[k].second].plane, max_shift);
    });
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        m.ncc[i][j] = m.ncc[j][i] = results[k].correlation;
        m.shift[i][j] = results[k].shift;
        m.shift[j][i] = {-results[k].shift.dx, -results[k].shift.dy};
    }
    return m;
}

/// Entry (i, j) correlates half A of pipeline i with half B of pipeline j,
/// so no entry shares estimation images and the diagonal is the same-config
/// split-half correlation. `aligned` selects post-alignment NCC.
inline CorrelationMatrix split_half_matrix(const std::vector<Fingerprint>& half_a, const std::vector<Fingerprint>& half_b,
                                           std::size_t max_shift, bool aligned = true) {
    if (half_a.size() != half_b.size() || half_a.empty()) throw ArgumentError("split_half_matrix: size mismatch");
    const std::size_t n = half_a.size();
    CorrelationMatrix m;
    for (const auto& f : half_a) m.ids.push_back(f.pipeline_id);
    m.ncc.assign(n, std::vector<double>(n, 0.0));
    m.shift.assign(n, std::vector<Shift>(n));
    parallel_for(n * n, [&](std::size_t k) {
        const std::size_t i = k / n, j = k % n;
        if (aligned) {
            const auto a = align(half_a[i].plane, half_b[j].plane, max_shift);
            m.ncc[i][j] = a.correlation;
            m.shift[i][j] = a.shift;
        } else {
            m.ncc[i][j] = ncc(half_a[i].plane, half_b[j].plane);
        }
    });
    return m;
}

// ---------------------------------------------------------------------------
// PCE sweeps

struct ScoreRecord {
    std::string fp_camera, est_pipeline, test_camera, test_pipeline;
    std::size_t image = 0, patch_size = 0, x = 0, y = 0;
    PceScore score;
    bool positive = false;

    friend bool operator==(const ScoreRecord& a, const ScoreRecord& b) {
        return a.fp_camera == b.fp_camera && a.est_pipeline == b.est_pipeline && a.test_camera == b.test_camera &&
               a.test_pipeline == b.test_pipeline && a.image == b.image && a.patch_size == b.patch_size &&
               a.x == b.x && a.y == b.y && a.score.pce == b.score.pce && a.score.peak_value == b.score.peak_value &&
               a.score.peak == b.score.peak && a.score.p_value == b.score.p_value && a.positive == b.positive;
    }
};

inline auto record_key(const ScoreRecord& r) {
    return std::tie(r.fp_camera, r.est_pipeline, r.test_camera, r.test_pipeline, r.patch_size, r.image, r.y, r.x);
}

/// Scores every non-overlapping patch of every test image (all cameras,
/// all test pipelines) against the full fingerprints of the requested
/// estimation pipelines. A record is positive when the test camera owns the
/// fingerprint. Patch sizes larger than a test image yield no records.
inline std::vector<ScoreRecord> pce_sweep(const ImageSource& source, const FingerprintSet& fps,
                                          const ExperimentConfig& config,
                                          const std::vector<std::string>& estimation_pipelines,
                                          const std::vector<std::size_t>& patch_sizes) {
    std::vector<std::size_t> est;
    for (const auto& id : estimation_pipelines) {
        auto it = std::find(fps.pipelines.begin(), fps.pipelines.end(), id);
        if (it == fps.pipelines.end() || fps.full.empty())
            throw StateError("pce_sweep: no fingerprint estimated for pipeline '" + id + "'");
        est.push_back(static_cast<std::size_t>(it - fps.pipelines.begin()));
    }
    for (auto s : patch_sizes)
        if (s == 0) throw ArgumentError("pce_sweep: patch size must be >= 1");
    const std::size_t C = config.cameras.size(), T = config.test_count;
    std::vector<std::vector<ScoreRecord>> slots(C * T);
    parallel_for(C * T, [&](std::size_t job) {
        const std::size_t tc = job / T, idx = job % T;
        const auto images = source.developed(tc, Split::test, idx);
        auto& out = slots[job];
        for (std::size_t q = 0; q < images.size(); ++q) {
            const ImagePlane lum = to_luminance(images[q]);
            const NoiseResidual res = residual(lum, config.denoiser);
            for (auto size : patch_sizes) {
                if (size > std::min(lum.width(), lum.height())) continue;
                const auto grid = tile_patches(lum, size);
                for (const auto& patch : grid.patches)
                    for (std::size_t fc = 0; fc < fps.cameras.size(); ++fc)
                        for (auto p : est) {
                            ScoreRecord r;
                            r.fp_camera = fps.cameras[fc];
                            r.est_pipeline = fps.pipelines[p];
                            r.test_camera = config.cameras[tc].id;
                            r.test_pipeline = config.pipelines[q].id;
                            r.image = idx;
                            r.patch_size = size;
                            r.x = patch.x;
                            r.y = patch.y;
                            r.positive = fc == tc;
                            r.score = match_patch(lum, res, fps.at(fc, p), patch.x, patch.y, size,
                                                  config.exclusion_radius);
                            out.push_back(std::move(r));
                        }
            }
        }
    });
    std::vector<ScoreRecord> records;
    for (auto& s : slots) std::move(s.begin(), s.end(), std::back_inserter(records));
    std::stable_sort(records.begin(), records.end(),
                     [](const ScoreRecord& a, const ScoreRecord& b) { return record_key(a) < record_key(b); });
    return records;
}

// ---------------------------------------------------------------------------
// ROC

struct RocCurve {
    std::vector<double> thresholds; ///< first entry is +infinity (nothing accepted)
    std::vector<double> fpr, tpr;
    double auc = 0.0;
};

/// Sweeps the threshold down through every distinct score; tied scores move
/// together, so a tie between classes becomes a diagonal segment.
inline RocCurve roc(std::vector<double> pos, std::vector<double> neg) {
    if (pos.empty() || neg.empty()) throw ArgumentError("roc: both score lists must be non-empty");
    for (double v : pos)
        if (std::isnan(v)) throw ArgumentError("roc: NaN score");
    for (double v : neg)
        if (std::isnan(v)) throw ArgumentError("roc: NaN score");
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    RocCurve c;
    c.thresholds.push_back(std::numeric_limits<double>::infinity());
    c.fpr.push_back(0.0);
    c.tpr.push_back(0.0);
    const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
    std::size_t ip = 0, in = 0;
    while (ip < pos.size() || in < neg.size()) {
        double t = -std::numeric_limits<double>::infinity();
        if (ip < pos.size()) t = std::max(t, pos[ip]);
        if (in < neg.size()) t = std::max(t, neg[in]);
        while (ip < pos.size() && pos[ip] == t) ++ip;
        while (in < neg.size() && neg[in] == t) ++in;
        c.thresholds.push_back(t);
        c.fpr.push_back(static_cast<double>(in) / nn);
        c.tpr.push_back(static_cast<double>(ip) / np);
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < c.fpr.size(); ++i) auc += (c.fpr[i] - c.fpr[i - 1]) * 0.5 * (c.tpr[i] + c.tpr[i - 1]);
    c.auc = std::clamp(auc, 0.0, 1.0);
    return c;
}

/// TPR at the largest achieved FPR not exceeding the target (no
/// interpolation between operating points).
inline double tpr_at_fpr(const RocCurve& curve, double target_fpr) {
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw ArgumentError("tpr_at_fpr: target must lie in (0,1)");
    double best = 0.0;
    for (std::size_t i = 0; i < curve.fpr.size(); ++i)
        if (curve.fpr[i] <= target_fpr) best = std::max(best, curve.tpr[i]);
    return best;
}

// ---------------------------------------------------------------------------
// Summaries

struct Quartiles {
    std::size_t count = 0;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

/// Linear-interpolation quantiles (the "type 7" convention).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ArgumentError("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Quartiles quartiles(const std::vector<double>& v) {
    if (v.empty()) return {};
    return {v.size(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

struct PairSummary {
    std::string est_pipeline, test_pipeline;
    std::size_t patch_size = 0;
    Quartiles positive;
    std::size_t negatives = 0;
    std::optional<double> auc, tpr; ///< absent when either class is empty
};

struct PooledSummary {
    std::size_t patch_size = 0;
    Quartiles same, cross;
    std::optional<double> same_auc, cross_auc, same_tpr, cross_tpr;
};

struct Summary {
    std::vector<PairSummary> pairs;
    std::vector<PooledSummary> pooled;
};

namespace detail {

inline std::vector<double> scores_where(const std::vector<ScoreRecord>& records, auto&& pred) {
    std::vector<double> v;
    for (const auto& r : records)
        if (pred(r)) v.push_back(r.score.pce);
    return v;
}

} // namespace detail

/// Per (estimation pipeline, test pipeline, size) and roster-pooled
/// same-pipeline vs cross-pipeline statistics. Negatives for a cell are the
/// other cameras' patches developed by the same test pipeline.
inline Summary summarize(const std::vector<ScoreRecord>& records, const std::vector<std::string>& pipelines,
                         const std::vector<std::size_t>& patch_sizes, double target_fpr = kReportFpr) {
    Summary s;
    for (auto size : patch_sizes) {
        for (const auto& e : pipelines)
            for (const auto& t : pipelines) {
                PairSummary ps{e, t, size, {}, 0, std::nullopt, std::nullopt};
                auto cell = [&](bool positive) {
                    return detail::scores_where(records, [&](const ScoreRecord& r) {
                        return r.patch_size == size && r.est_pipeline == e && r.test_pipeline == t &&
                               r.positive == positive;
                    });
                };
                const auto pos = cell(true), neg = cell(false);
                ps.positive = quartiles(pos);
                ps.negatives = neg.size();
                if (!pos.empty() && !neg.empty()) {
                    const auto c = roc(pos, neg);
                    ps.auc = c.auc;
                    ps.tpr = tpr_at_fpr(c, target_fpr);
                }
                if (ps.positive.count > 0 || ps.negatives > 0) s.pairs.push_back(std::move(ps));
            }
        PooledSummary pooled{size, {}, {}, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        auto group = [&](bool same, bool positive) {
            return detail::scores_where(records, [&](const ScoreRecord& r) {
                return r.patch_size == size && (r.est_pipeline == r.test_pipeline) == same && r.positive == positive;
            });
        };
        const auto sp = group(true, true), sn = group(true, false), cp = group(false, true), cn = group(false, false);
        pooled.same = quartiles(sp);
        pooled.cross = quartiles(cp);
        if (!sp.empty() && !sn.empty()) {
            const auto c = roc(sp, sn);
            pooled.same_auc = c.auc;
            pooled.same_tpr = tpr_at_fpr(c, target_fpr);
        }
        if (!cp.empty() && !cn.empty()) {
            const auto c = roc(cp, cn);
            pooled.cross_auc = c.auc;
            pooled.cross_tpr = tpr_at_fpr(c, target_fpr);
        }
        if (pooled.same.count > 0 || pooled.cross.count > 0) s.pooled.push_back(std::move(pooled));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Serialization of records

inline nlohmann::json to_json(const ScoreRecord& r) {
    return {{"fp_camera", r.fp_camera},
            {"est_pipeline", r.est_pipeline},
            {"test_camera", r.test_camera},
            {"test_pipeline", r.test_pipeline},
            {"image", r.image},
            {"patch_size", r.patch_size},
            {"x", r.x},
            {"y", r.y},
            {"pce", r.score.pce},
            {"peak_value", r.score.peak_value},
            {"peak_dx", r.score.peak.dx},
            {"peak_dy", r.score.peak.dy},
            {"p_value", r.score.p_value},
            {"positive", r.positive}};
}

inline ScoreRecord score_record_from_json(const nlohmann::json& j) {
    try {
        ScoreRecord r;
        r.fp_camera = j.value("fp_camera", "");
        r.est_pipeline = j.value("est_pipeline", "");
        r.test_camera = j.value("test_camera", "");
        r.test_pipeline = j.value("test_pipeline", "");
        r.image = j.value("image", std::size_t{0});
        r.patch_size = j.at("patch_size").get<std::size_t>();
        r.x = j.at("x").get<std::size_t>();
        r.y = j.at("y").get<std::size_t>();
        r.score.pce = j.at("pce").get<double>();
        r.score.peak_value = j.at("peak_value").get<double>();
        r.score.peak = {j.at("peak_dx").get<long>(), j.at("peak_dy").get<long>()};
        r.score.p_value = j.at("p_value").get<double>();
        r.positive = j.value("positive", false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("score record: ") + e.what());
    }
}

inline std::vector<ScoreRecord> score_records_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("score records: expected a JSON array");
    std::vector<ScoreRecord> out;
    for (const auto& r : j) out.push_back(score_record_from_json(r));
    return out;
}

namespace detail {

/// Shortest decimal form that round-trips.
inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot create " + path.string());
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
        out_ << '\n';
    }
    ~CsvWriter() = default;
    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

} // namespace detail

inline constexpr const char* kRecordColumns[] = {"fp_camera", "est_pipeline", "test_camera", "test_pipeline",
                                                 "image",     "patch_size",   "x",           "y",
                                                 "pce",       "peak_value",   "peak_dx",     "peak_dy",
                                                 "p_value",   "positive"};

inline void write_records_csv(const std::vector<ScoreRecord>& records, const std::filesystem::path& path) {
    detail::CsvWriter w(path);
    w.row(std::vector<std::string>(std::begin(kRecordColumns), std::end(kRecordColumns)));
    using detail::fmt_double;
    for (const auto& r : records)
        w.row({r.fp_camera, r.est_pipeline, r.test_camera, r.test_pipeline, std::to_string(r.image),
               std::to_string(r.patch_size), std::to_string(r.x), std::to_string(r.y), fmt_double(r.score.pce),
               fmt_double(r.score.peak_value), std::to_string(r.score.peak.dx), std::to_string(r.score.peak.dy),
               fmt_double(r.score.p_value), r.positive ? "1" : "0"});
    w.close();
}

inline std::vector<ScoreRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("records CSV: missing header");
    const auto header = detail::split_csv_line(line);
    if (header != std::vector<std::string>(std::begin(kRecordColumns), std::end(kRecordColumns)))
        throw FormatError("records CSV: unexpected header");
    std::vector<ScoreRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size()) throw FormatError("records CSV: wrong field count");
        try {
            ScoreRecord r;
            r.fp_camera = f[0];
            r.est_pipeline = f[1];
            r.test_camera = f[2];
            r.test_pipeline = f[3];
            r.image = std::stoul(f[4]);
            r.patch_size = std::stoul(f[5]);
            r.x = std::stoul(f[6]);
            r.y = std::stoul(f[7]);
            r.score.pce = std::stod(f[8]);
            r.score.peak_value = std::stod(f[9]);
            r.score.peak = {std::stol(f[10]), std::stol(f[11])};
            r.score.p_value = std::stod(f[12]);
            r.positive = f[13] == "1";
            out.push_back(std::move(r));
        } catch (const std::exception&) {
            throw FormatError("records CSV: malformed number");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-run orchestration and reports

struct EvaluationResult {
    ExperimentConfig config;
    FingerprintSet fingerprints;
    std::vector<CorrelationMatrix> correlation;       ///< per camera, full fingerprints
    std::vector<CorrelationMatrix> split_half;        ///< per camera, aligned
    std::vector<CorrelationMatrix> split_half_raw;    ///< per camera, no alignment
    std::vector<ScoreRecord> records;
    Summary summary;
};

inline EvaluationResult evaluate(const ImageSource& source, const ExperimentConfig& config) {
    EvaluationResult r;
    r.config = config;
    r.fingerprints = estimate_fingerprints(source, config);
    for (std::size_t c = 0; c < config.cameras.size(); ++c) {
        r.correlation.push_back(correlation_matrix(r.fingerprints.for_camera(c, r.fingerprints.full), config.max_shift));
        const auto a = r.fingerprints.for_camera(c, r.fingerprints.half_a);
        const auto b = r.fingerprints.for_camera(c, r.fingerprints.half_b);
        r.split_half.push_back(split_half_matrix(a, b, config.max_shift, true));
        r.split_half_raw.push_back(split_half_matrix(a, b, config.max_shift, false));
    }
    r.records = pce_sweep(source, r.fingerprints, config, r.fingerprints.pipelines, config.patch_sizes);
    r.summary = summarize(r.records, r.fingerprints.pipelines, config.patch_sizes);
    return r;
}

inline EvaluationResult evaluate(const ExperimentConfig& config) { return evaluate(SimulatedSource(config), config); }

namespace detail {

inline void write_matrix_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
    CsvWriter w(path);
    std::vector<std::string> head = {"pipeline"};
    head.insert(head.end(), m.ids.begin(), m.ids.end());
    w.row(head);
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
        std::vector<std::string> row = {m.ids[i]};
        for (double v : m.ncc[i]) row.push_back(fmt_double(v));
        w.row(row);
    }
    w.close();
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace detail

/// Writes correlation_matrix_<camera>.csv, split_half_<camera>.csv,
/// pce_summary.csv, roc_points.csv, records.csv, summary.json and
/// run_metadata.json.
inline void report(const EvaluationResult& r, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    using detail::fmt_double;

    for (std::size_t c = 0; c < r.correlation.size(); ++c) {
        detail::write_matrix_csv(r.correlation[c], out_dir / ("correlation_matrix_" + r.fingerprints.cameras[c] + ".csv"));
        detail::write_matrix_csv(r.split_half[c], out_dir / ("split_half_" + r.fingerprints.cameras[c] + ".csv"));
    }

    {
        detail::CsvWriter w(out_dir / "pce_summary.csv");
        w.row({"est_pipeline", "test_pipeline", "patch_size", "count", "median", "q1", "q3"});
        for (const auto& p : r.summary.pairs)
            if (p.positive.count > 0)
                w.row({p.est_pipeline, p.test_pipeline, std::to_string(p.patch_size), std::to_string(p.positive.count),
                       fmt_double(p.positive.median), fmt_double(p.positive.q1), fmt_double(p.positive.q3)});
        w.close();
    }

    {
        detail::CsvWriter w(out_dir / "roc_points.csv");
        w.row({"est_pipeline", "test_pipeline", "patch_size", "threshold", "fpr", "tpr"});
        for (const auto& p : r.summary.pairs) {
            if (!p.auc) continue;
            auto cell = [&](bool positive) {
                return detail::scores_where(r.records, [&](const ScoreRecord& s) {
                    return s.patch_size == p.patch_size && s.est_pipeline == p.est_pipeline &&
                           s.test_pipeline == p.test_pipeline && s.positive == positive;
                });
            };
            const auto curve = roc(cell(true), cell(false));
            for (std::size_t i = 0; i < curve.fpr.size(); ++i)
                w.row({p.est_pipeline, p.test_pipeline, std::to_string(p.patch_size), fmt_double(curve.thresholds[i]),
                       fmt_double(curve.fpr[i]), fmt_double(curve.tpr[i])});
        }
        w.close();
    }

    write_records_csv(r.records, out_dir / "records.csv");

    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.summary.pairs)
        pairs.push_back({{"est_pipeline", p.est_pipeline},
                         {"test_pipeline", p.test_pipeline},
                         {"patch_size", p.patch_size},
                         {"positives", p.positive.count},
                         {"negatives", p.negatives},
                         {"median_pce", p.positive.count ? nlohmann::json(p.positive.median) : nlohmann::json(nullptr)},
                         {"auc", detail::optional_json(p.auc)},
                         {"tpr_at_fpr", detail::optional_json(p.tpr)}});
    nlohmann::json pooled = nlohmann::json::array();
    for (const auto& p : r.summary.pooled)
        pooled.push_back({{"patch_size", p.patch_size},
                          {"same_median_pce", p.same.count ? nlohmann::json(p.same.median) : nlohmann::json(nullptr)},
                          {"cross_median_pce", p.cross.count ? nlohmann::json(p.cross.median) : nlohmann::json(nullptr)},
                          {"same_auc", detail::optional_json(p.same_auc)},
                          {"cross_auc", detail::optional_json(p.cross_auc)},
                          {"same_tpr_at_fpr", detail::optional_json(p.same_tpr)},
                          {"cross_tpr_at_fpr", detail::optional_json(p.cross_tpr)}});
    detail::write_json({{"target_fpr", kReportFpr}, {"pairs", pairs}, {"pooled", pooled}}, out_dir / "summary.json");

    nlohmann::json sensors = nlohmann::json::array();
    for (std::size_t c = 0; c < r.config.cameras.size(); ++c)
        sensors.push_back({{"id", r.config.cameras[c].id}, {"seed", r.config.sensor_seed(c)}});
    detail::write_json({{"tool", "prnukit"},
                        {"version", kVersion},
                        {"master_seed", r.config.seed},
                        {"sensors", sensors},
                        {"config", to_json(r.config)},
                        {"record_count", r.records.size()}},
                       out_dir / "run_metadata.json");
}

/// Human-readable table: per estimation pipeline and patch size, the
/// same-pipeline median PCE, AUC and TPR at 0.5% FPR next to the pooled
/// cross-pipeline median.
inline std::string summary_table(const EvaluationResult& r) {
    std::ostringstream out;
    out << std::left << std::setw(24) << "est_pipeline" << std::right << std::setw(7) << "patch" << std::setw(13)
        << "median_same" << std::setw(13) << "median_cross" << std::setw(9) << "auc" << std::setw(11) << "tpr@0.5%"
        << "\n";
    for (auto size : r.config.patch_sizes)
        for (const auto& e : r.fingerprints.pipelines) {
            const PairSummary* same = nullptr;
            for (const auto& p : r.summary.pairs)
                if (p.patch_size == size && p.est_pipeline == e && p.test_pipeline == e) same = &p;
            const auto cross = detail::scores_where(r.records, [&](const ScoreRecord& s) {
                return s.patch_size == size && s.est_pipeline == e && s.test_pipeline != e && s.positive;
            });
            if (!same && cross.empty()) continue;
            auto num = [](std::optional<double> v, int prec) {
                if (!v) return std::string("-");
                std::ostringstream s;
                s << std::fixed << std::setprecision(prec) << *v;
                return s.str();
            };
            out << std::left << std::setw(24) << e << std::right << std::setw(7) << size << std::setw(13)
                << num(same && same->positive.count ? std::optional<double>(same->positive.median) : std::nullopt, 1)
                << std::setw(13) << num(cross.empty() ? std::nullopt : std::optional<double>(quantile(cross, 0.5)), 1)
                << std::setw(9) << num(same ? same->auc : std::nullopt, 4) << std::setw(11)
                << num(same ? same->tpr : std::nullopt, 4) << "\n";
        }
    return out.str();
}

} // namespace prnu
