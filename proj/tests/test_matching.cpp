// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/ispsim.hpp"
#include "prnu/matching.hpp"
#include "prnu/parallel.hpp"

using namespace prnu;

namespace {

/// Image, residual and fingerprint for a flat-ish scene with planted k.
struct Matched {
    ImagePlane image;
    NoiseResidual res;
    Fingerprint fp;
};

Matched matched_pair(std::size_t n, std::uint64_t seed, bool same_camera = true) {
    std::mt19937_64 rng(seed);
    const auto k = oracle::random_plane(n, n, rng, 0.02);
    const auto other = oracle::random_plane(n, n, rng, 0.02);
    const auto content = oracle::uniform_plane(n, n, rng, 0.45, 0.55);
    ImagePlane img(n, n);
    const auto& used = same_camera ? k : other;
    std::normal_distribution<double> noise(0.0, 0.002);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.samples()[i] = content.samples()[i] * (1.0 + used.samples()[i]) + noise(rng);
    return {img, residual(img, DenoiserSpec::wavelet()), Fingerprint{k, "a", "p", 1}};
}

} // namespace

TEST(Ncc, Identities) {
    std::mt19937_64 rng(1);
    const auto x = oracle::random_plane(8, 8, rng);
    ImagePlane neg = x, offset = x;
    for (double& v : neg.samples()) v = -v;
    for (double& v : offset.samples()) v += 3.5;
    EXPECT_NEAR(ncc(x, x), 1.0, 1e-15);
    EXPECT_NEAR(ncc(x, neg), -1.0, 1e-15);
    EXPECT_NEAR(ncc(x, offset), 1.0, 1e-12);
    EXPECT_THROW(ncc(x, ImagePlane(8, 8, 1.0)), DegenerateError);
    EXPECT_THROW(ncc(x, ImagePlane(8, 7)), ShapeError);
}

TEST(CrossCorrelate, AutocorrelationPeaksAtZero) {
    std::mt19937_64 rng(2);
    const auto a = oracle::random_plane(20, 12, rng);
    const auto s = cross_correlate(a, a);
    for (double v : s.values.samples()) EXPECT_LE(v, s.at(0, 0) + 1e-12);
}

TEST(CrossCorrelate, ShiftTheorem) {
    std::mt19937_64 rng(3);
    const auto a = oracle::random_plane(32, 32, rng);
    const auto s = pce(cross_correlate(a, circular_shift(a, 5, 9)));
    EXPECT_EQ(s.peak, (Shift{5, 9}));
}

TEST(CrossCorrelate, MatchesBruteForce) {
    for (std::size_t n : {16u, 32u})
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(derive_seed(41, n, seed));
            std::uniform_int_distribution<std::size_t> dim(2, n);
            const std::size_t w = seed % 2 ? n : dim(rng), h = seed % 2 ? n : dim(rng);
            const auto a = oracle::random_plane(w, h, rng), b = oracle::random_plane(w, h, rng);
            const auto fast = cross_correlate(a, b);
            const auto slow = oracle::brute_cross_correlation(a, b);
            for (std::size_t i = 0; i < slow.size(); ++i) ASSERT_NEAR(fast.values.samples()[i], slow[i], 1e-6);
        }
}

TEST(Pce, DegenerateSurfaces) {
    ImagePlane single(16, 16, 0.0);
    single(3, 4) = 2.0;
    EXPECT_THROW(pce(CorrelationSurface{single}), DegenerateError);
    EXPECT_THROW(pce(CorrelationSurface{ImagePlane(16, 16, 0.0)}), DegenerateError);
    EXPECT_THROW(pce(CorrelationSurface{ImagePlane(11, 11, 1.0)}), SizeError);
}

TEST(Pce, ClosedFormWithConstantOffPeak) {
    ImagePlane s(32, 32, 0.5);
    s(0, 0) = 4.0;
    EXPECT_NEAR(pce(CorrelationSurface{s}).pce, 16.0 / 0.25, 1e-12);
    s(0, 0) = -4.0;
    const auto neg = pce(CorrelationSurface{s});
    EXPECT_NEAR(neg.pce, -64.0, 1e-12);
}

TEST(Pce, ScaleInvariant) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(42, seed));
        const auto surface = oracle::random_plane(24, 20, rng);
        std::uniform_real_distribution<double> u(1e-3, 1e3);
        ImagePlane scaled = surface;
        const double alpha = u(rng);
        for (double& v : scaled.samples()) v *= alpha;
        const auto a = pce(CorrelationSurface{surface}), b = pce(CorrelationSurface{scaled});
        ASSERT_NEAR(a.pce, b.pce, 1e-9 * std::max(1.0, std::abs(a.pce)));
        ASSERT_EQ(a.peak, b.peak);
    }
}

TEST(Pce, MatchedPairInvariantToCoShift) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(43, seed));
        const auto k = oracle::random_plane(32, 32, rng);
        const auto r = oracle::random_plane(32, 32, rng, 0.5);
        ImagePlane obs = k;
        for (std::size_t i = 0; i < obs.size(); ++i) obs.samples()[i] += r.samples()[i];
        std::uniform_int_distribution<long> d(-31, 31);
        const long dx = d(rng), dy = d(rng);
        const auto base = pce(cross_correlate(k, obs));
        const auto moved = pce(cross_correlate(circular_shift(k, dx, dy), circular_shift(obs, dx, dy)));
        ASSERT_NEAR(base.pce, moved.pce, 1e-9 * std::abs(base.pce));
    }
}

TEST(PValue, Values) {
    EXPECT_DOUBLE_EQ(p_value(0.0, 100), 0.5);
    EXPECT_EQ(p_value(1e6, 100), 0.0);
    EXPECT_NEAR(p_value(4.0, 100), 0.022750131948179195, 1e-15);
    EXPECT_DOUBLE_EQ(p_value(-5.0, 100), 0.5);
    EXPECT_THROW(p_value(std::nan(""), 100), ArgumentError);
    EXPECT_THROW(p_value(1.0, 1), ArgumentError);
}

TEST(PValue, MonotoneNonIncreasing) {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        ASSERT_GE(p_value(a, 64), p_value(b, 64));
    }
}

TEST(Align, SelfAndPlantedShifts) {
    std::mt19937_64 rng(45);
    const auto fa = oracle::random_plane(64, 64, rng);
    const auto self = align(fa, fa, 8);
    EXPECT_EQ(self.shift, (Shift{0, 0}));
    EXPECT_NEAR(self.correlation, 1.0, 1e-12);
    EXPECT_EQ(align(fa, circular_shift(fa, 5, 9), 16).shift, (Shift{5, 9}));
    EXPECT_THROW(align(fa, fa, 32), ArgumentError);
    EXPECT_THROW(align(fa, ImagePlane(64, 63), 4), ShapeError);
}

TEST(Align, RecoversAnyShiftWithinRange) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(46, seed));
        const auto fa = oracle::random_plane(48, 40, rng);
        std::uniform_int_distribution<long> d(-10, 10);
        const Shift s{d(rng), d(rng)};
        ASSERT_EQ(align(fa, circular_shift(fa, s.dx, s.dy), 10).shift, s);
    }
}

TEST(Align, CroppedAndRepadded) {
    std::mt19937_64 rng(47);
    const auto fa = oracle::random_plane(128, 128, rng);
    // fb holds fa's content displaced by (3, 2) with zeros in the uncovered border.
    ImagePlane fb(128, 128, 0.0);
    for (std::size_t y = 0; y + 2 < 128; ++y)
        for (std::size_t x = 0; x + 3 < 128; ++x) fb(x + 3, y + 2) = fa(x, y);
    const auto a = align(fa, fb, 8);
    EXPECT_EQ(a.shift, (Shift{3, 2}));
    EXPECT_GT(a.correlation, 0.99);
}

TEST(MatchPatch, MatchedAboveThreshold) {
    const auto m = matched_pair(512, 48);
    const auto s = match_patch(m.image, m.res, m.fp, 0, 0, 512);
    EXPECT_GT(s.pce, 50.0);
    EXPECT_EQ(s.peak, (Shift{0, 0}));
    EXPECT_LT(s.p_value, 1e-6);
}

TEST(MatchPatch, OtherCameraRarelyAboveThreshold) {
    std::size_t above = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto m = matched_pair(256, derive_seed(49, seed), false);
        for (const auto& p : tile_patches(m.image, 64).patches) {
            above += match_patch(m.image, m.res, m.fp, p.x, p.y, 64).pce > 50.0;
            ++total;
        }
    }
    EXPECT_LE(double(above), 0.01 * double(total));
}

TEST(MatchPatch, SynchronizedUsesZeroShift) {
    const auto m = matched_pair(128, 50);
    const auto s = match_patch_synchronized(m.image, m.res, m.fp, 0, 0, 128);
    EXPECT_EQ(s.peak, (Shift{0, 0}));
    EXPECT_GT(s.pce, 50.0);
}

TEST(MatchPatch, Errors) {
    const auto m = matched_pair(64, 51);
    EXPECT_THROW(match_patch(m.image, m.res, m.fp, 32, 0, 64), BoundsError);
    EXPECT_THROW(match_patch(m.image, m.res, Fingerprint{ImagePlane(64, 64), "", "", 1}, 0, 0, 64), DegenerateError);
    EXPECT_THROW(match_patch(m.image, NoiseResidual{ImagePlane(32, 32), ""}, m.fp, 0, 0, 32), ShapeError);
}

TEST(MatchRegion, WholeRectangle) {
    const auto m = matched_pair(128, 52);
    const auto crop_img = crop(m.image, 0, 0, 128, 96);
    const auto whole = match_region(crop_img, residual(crop_img, DenoiserSpec::wavelet()), m.fp, 0, 0, 128, 96);
    EXPECT_GT(whole.pce, 50.0);
}
