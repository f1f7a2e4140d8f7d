// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/ispsim.hpp"
#include "prnu/matching.hpp"
#include "prnu/parallel.hpp"
#include "test_util.hpp"

using namespace prnu;

namespace {

EstimationOptions unmasked() {
    EstimationOptions o;
    o.saturation_level = std::nullopt;
    return o;
}

NoiseResidual as_residual(ImagePlane p) { return {std::move(p), {}}; }

double max_abs_rel(const ImagePlane& a, const ImagePlane& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a.samples()[i]), std::abs(b.samples()[i]), 1e-300});
        m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]) / scale);
    }
    return m;
}

} // namespace

TEST(Estimate, SingleImageReducesToRatio) {
    const auto fp = estimate_fingerprint({ImagePlane(3, 2, 2.0)}, {as_residual(ImagePlane(3, 2, 0.5))}, unmasked());
    for (double v : fp.plane.samples()) EXPECT_DOUBLE_EQ(v, 0.25);
    EXPECT_EQ(fp.n_sources, 1u);
}

TEST(Estimate, TwoImagesAtOnePixel) {
    const auto fp = estimate_fingerprint({ImagePlane(1, 1, 1.0), ImagePlane(1, 1, 1.0)},
                                         {as_residual(ImagePlane(1, 1, 0.2)), as_residual(ImagePlane(1, 1, 0.4))},
                                         unmasked());
    EXPECT_NEAR(fp.plane(0, 0), 0.3, 1e-15);
}

TEST(Estimate, ZeroDenominatorGivesZero) {
    const auto fp = estimate_fingerprint({ImagePlane(2, 1, 0.0)}, {as_residual(ImagePlane(2, 1, 0.1))});
    EXPECT_EQ(fp.plane(0, 0), 0.0);
}

TEST(Estimate, SaturatedPixelsExcluded) {
    ImagePlane a(2, 1, 0.5), b(2, 1, 0.5);
    a(1, 0) = 1.0;
    const auto fp = estimate_fingerprint({a, b}, {as_residual(ImagePlane(2, 1, 0.05)), as_residual(ImagePlane(2, 1, 0.1))});
    EXPECT_NEAR(fp.plane(1, 0), 0.1 / 0.5, 1e-15);
    EXPECT_NEAR(fp.plane(0, 0), (0.025 + 0.05) / 0.5, 1e-15);
}

TEST(Estimate, Errors) {
    EXPECT_THROW(estimate_fingerprint({}, {}), ArgumentError);
    EXPECT_THROW(estimate_fingerprint({ImagePlane(2, 2)}, {as_residual(ImagePlane(2, 3))}), ShapeError);
    EXPECT_THROW(estimate_fingerprint({ImagePlane(2, 2), ImagePlane(3, 2)},
                                      {as_residual(ImagePlane(2, 2)), as_residual(ImagePlane(3, 2))}),
                 ShapeError);
    EXPECT_THROW(estimate_fingerprint({ImagePlane(2, 2)}, {as_residual(ImagePlane(2, 2)), as_residual(ImagePlane(2, 2))}),
                 ShapeError);
}

TEST(Estimate, HomogeneousInResidualScale) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(31, seed));
        std::vector<ImagePlane> imgs;
        std::vector<NoiseResidual> res, scaled;
        const double alpha = std::ldexp(1.0, int(seed % 7) - 3);
        for (int i = 0; i < 3; ++i) {
            imgs.push_back(oracle::uniform_plane(6, 5, rng, 0.1, 0.9));
            res.push_back(as_residual(oracle::random_plane(6, 5, rng, 0.01)));
            ImagePlane s = res.back().plane;
            for (double& v : s.samples()) v *= alpha;
            scaled.push_back(as_residual(s));
        }
        const auto a = estimate_fingerprint(imgs, res), b = estimate_fingerprint(imgs, scaled);
        for (std::size_t i = 0; i < a.plane.size(); ++i) ASSERT_EQ(b.plane.samples()[i], alpha * a.plane.samples()[i]);
    }
}

TEST(Estimate, IdenticalImagesMatchSingle) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(32, seed));
        const auto img = oracle::uniform_plane(5, 4, rng, 0.1, 0.9);
        const auto r = as_residual(oracle::random_plane(5, 4, rng, 0.01));
        const std::size_t n = 2 + seed % 6;
        const auto one = estimate_fingerprint({img}, {r});
        const auto many = estimate_fingerprint(std::vector<ImagePlane>(n, img), std::vector<NoiseResidual>(n, r));
        ASSERT_LE(max_abs_rel(one.plane, many.plane), 1e-14);
    }
}

TEST(Estimate, PermutationInvariant) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(33, seed));
        const std::size_t n = 2 + seed % 9;
        std::vector<ImagePlane> imgs;
        std::vector<NoiseResidual> res;
        for (std::size_t i = 0; i < n; ++i) {
            imgs.push_back(oracle::uniform_plane(6, 6, rng, 0.05, 0.95));
            res.push_back(as_residual(oracle::random_plane(6, 6, rng, 0.01)));
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<ImagePlane> imgs2;
        std::vector<NoiseResidual> res2;
        for (auto i : order) {
            imgs2.push_back(imgs[i]);
            res2.push_back(res[i]);
        }
        ASSERT_LE(max_abs_rel(estimate_fingerprint(imgs, res).plane, estimate_fingerprint(imgs2, res2).plane), 1e-9);
    }
}

TEST(Estimate, AccumulatorMergeMatchesSinglePass) {
    std::mt19937_64 rng(34);
    FingerprintAccumulator a, b, all;
    for (int i = 0; i < 7; ++i) {
        const auto img = oracle::uniform_plane(4, 4, rng, 0.1, 0.9);
        const auto r = oracle::random_plane(4, 4, rng, 0.01);
        (i % 2 ? b : a).add(img, r);
        all.add(img, r);
    }
    a.merge(b);
    EXPECT_EQ(a.count(), 7u);
    EXPECT_LE(max_abs_rel(a.finish().plane, all.finish().plane), 1e-12);
}

TEST(Estimate, RecoversPlantedPatternFromFlatFields) {
    SensorParams params;
    params.strength = 0.02;
    const auto sensor = synth_sensor(128, 128, params, 5, "s");
    const auto scene = synth_scene(128, 128, {SceneKind::flat, 0.5, 3.0}, 0);
    FingerprintAccumulator acc;
    for (int i = 0; i < 60; ++i) {
        const auto raw = capture(scene, sensor, derive_seed(5, 1, i));
        acc.add(raw, residual(raw, DenoiserSpec::wavelet()));
    }
    const auto fp = acc.finish();
    EXPECT_EQ(fp.n_sources, 60u);
    EXPECT_GT(ncc(fp.plane, sensor.prnu), 0.9);
}

TEST(Clean, ConstantRowsVanish) {
    ImagePlane p(4, 3);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x) p(x, y) = double(y + 1);
    const auto fp = clean_fingerprint({p, "", "", 1});
    for (double v : fp.plane.samples()) EXPECT_EQ(v, 0.0);
}

TEST(Clean, ZeroMeanRowsAndColumnsAndIdempotent) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(35, seed));
        std::uniform_int_distribution<std::size_t> dim(2, 20);
        const std::size_t w = dim(rng), h = dim(rng);
        const auto once = clean_fingerprint({oracle::random_plane(w, h, rng), "", "", 1});
        for (std::size_t y = 0; y < h; ++y) {
            double m = 0;
            for (std::size_t x = 0; x < w; ++x) m += once.plane(x, y);
            ASSERT_LT(std::abs(m / double(w)), 1e-9);
        }
        for (std::size_t x = 0; x < w; ++x) {
            double m = 0;
            for (std::size_t y = 0; y < h; ++y) m += once.plane(x, y);
            ASSERT_LT(std::abs(m / double(h)), 1e-9);
        }
        const auto twice = clean_fingerprint(once);
        for (std::size_t i = 0; i < once.plane.size(); ++i)
            ASSERT_NEAR(twice.plane.samples()[i], once.plane.samples()[i], 1e-12);
    }
}

TEST(Whiten, SuppressesPeriodicGrid) {
    std::mt19937_64 rng(36);
    auto k = oracle::random_plane(64, 64, rng, 1.0);
    ImagePlane grid(64, 64);
    for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x) grid(x, y) = (x % 8 == 0) ? 3.0 : 0.0;
    ImagePlane mixed = k;
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed.samples()[i] += grid.samples()[i];
    const auto w = whiten_fingerprint({mixed, "", "", 1});
    EXPECT_LT(std::abs(ncc(w.plane, grid)), std::abs(ncc(mixed, grid)));
    EXPECT_GT(ncc(w.plane, k), 0.2);
}

TEST(FingerprintFile, RoundTripExact) {
    prnu_test::TempDir dir;
    std::mt19937_64 rng(37);
    const Fingerprint fp{oracle::random_plane(9, 7, rng), "cam-a", "bilinear", 60};
    save_fingerprint(fp, dir / "a.prnu");
    EXPECT_EQ(load_fingerprint(dir / "a.prnu"), fp);
    std::ifstream in(dir / "a.prnu", std::ios::binary);
    std::string head(6, '\0');
    in.read(head.data(), 6);
    EXPECT_EQ(head, "PRNU1\n");
}

TEST(FingerprintFile, Corruption) {
    prnu_test::TempDir dir;
    const Fingerprint fp{ImagePlane(4, 4, 0.1), "c", "p", 1};
    save_fingerprint(fp, dir / "a.prnu");
    auto bytes = detail::read_file(dir / "a.prnu");
    auto write = [&](const std::vector<unsigned char>& b) {
        std::ofstream out(dir / "b.prnu", std::ios::binary);
        out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
    };
    auto bad = bytes;
    bad[0] = 'X';
    write(bad);
    EXPECT_THROW(load_fingerprint(dir / "b.prnu"), FormatError);
    bad = bytes;
    bad.pop_back();
    write(bad);
    EXPECT_THROW(load_fingerprint(dir / "b.prnu"), FormatError);
    std::string text(bytes.begin(), bytes.end());
    text.replace(text.find("width=4"), 7, "width=5");
    write({text.begin(), text.end()});
    EXPECT_THROW(load_fingerprint(dir / "b.prnu"), FormatError);
    EXPECT_THROW(load_fingerprint(dir / "missing.prnu"), IoError);
    EXPECT_THROW(save_fingerprint({ImagePlane(1, 1), "a\nb", "", 1}, dir / "c.prnu"), ArgumentError);
}
