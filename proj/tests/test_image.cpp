// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prnu/image.hpp"
#include "prnu/parallel.hpp"
#include "test_util.hpp"

using namespace prnu;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& header, const std::vector<unsigned char>& data) {
    std::ofstream out(p, std::ios::binary);
    out << header;
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

ColorImage random_color(std::size_t w, std::size_t h, std::mt19937_64& rng) {
    return ColorImage(oracle::uniform_plane(w, h, rng), oracle::uniform_plane(w, h, rng),
                      oracle::uniform_plane(w, h, rng));
}

} // namespace

TEST(ImagePlane, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(ImagePlane(0, 3), ArgumentError);
    EXPECT_THROW(ImagePlane(3, 0), ArgumentError);
    EXPECT_THROW(ImagePlane(2, 1, std::vector<double>{1.0, std::nan("")}), ArgumentError);
    EXPECT_THROW(ImagePlane(2, 2, std::vector<double>{1.0}), ShapeError);
    ImagePlane p(3, 2, 0.25);
    EXPECT_EQ(p.size(), 6u);
    EXPECT_EQ(p(2, 1), 0.25);
}

TEST(ColorImage, ChannelShapesMustAgree) {
    EXPECT_THROW(ColorImage(ImagePlane(2, 2), ImagePlane(2, 2), ImagePlane(3, 2)), ShapeError);
}

TEST(LoadImage, EightBitGrayNormalizes) {
    prnu_test::TempDir dir;
    write_bytes(dir / "a.pgm", "P5\n2 2\n255\n", {0, 128, 255, 64});
    const auto img = load_image(dir / "a.pgm");
    ASSERT_EQ(img.width(), 2u);
    EXPECT_EQ(img.r(0, 0), 0.0);
    EXPECT_EQ(img.r(1, 0), 128.0 / 255.0);
    EXPECT_EQ(img.r(0, 1), 1.0);
    EXPECT_EQ(img.r(1, 1), 64.0 / 255.0);
    EXPECT_EQ(img.r, img.g);
    EXPECT_EQ(img.r, img.b);
}

TEST(LoadImage, SixteenBitMaxIsOne) {
    prnu_test::TempDir dir;
    write_bytes(dir / "a.ppm", "P6\n1 1\n65535\n", {0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00});
    const auto img = load_image(dir / "a.ppm");
    EXPECT_EQ(img.r(0, 0), 1.0);
    EXPECT_EQ(img.g(0, 0), 0.0);
    EXPECT_EQ(img.b(0, 0), 32768.0 / 65535.0);
}

TEST(LoadImage, Errors) {
    prnu_test::TempDir dir;
    EXPECT_THROW(load_image(dir / "missing.pgm"), IoError);
    write_bytes(dir / "ascii.pgm", "P2\n1 1\n255\n0\n", {});
    EXPECT_THROW(load_image(dir / "ascii.pgm"), FormatError);
    write_bytes(dir / "short.pgm", "P5\n4 4\n255\n", {1, 2, 3});
    EXPECT_THROW(load_image(dir / "short.pgm"), FormatError);
    write_bytes(dir / "zero.pgm", "P5\n0 4\n255\n", {});
    EXPECT_THROW(load_image(dir / "zero.pgm"), FormatError);
    write_bytes(dir / "over.pgm", "P5\n1 1\n100\n", {200});
    EXPECT_THROW(load_image(dir / "over.pgm"), FormatError);
    write_bytes(dir / "comment.pgm", "P5\n# note\n1 1\n255\n", {51});
    EXPECT_DOUBLE_EQ(load_image(dir / "comment.pgm").r(0, 0), 0.2);
}

TEST(SaveImage, SixteenBitRoundTripIsBitExact) {
    prnu_test::TempDir dir;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(11, seed));
        const auto img = random_color(7 + seed % 5, 3 + seed % 4, rng);
        const auto a = dir / ("a" + std::to_string(seed) + ".ppm"), b = dir / ("b" + std::to_string(seed) + ".ppm");
        save_ppm(img, a, 16);
        save_ppm(load_image(a), b, 16);
        ASSERT_EQ(file_bytes(a), file_bytes(b)) << "seed " << seed;
    }
}

TEST(SaveImage, LoadSaveLoadIsIdempotent) {
    prnu_test::TempDir dir;
    for (int depth : {8, 16})
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(derive_seed(12, seed, depth));
            const auto plane = oracle::uniform_plane(5, 4, rng);
            const std::string tag = std::to_string(depth) + "-" + std::to_string(seed);
            save_pgm(plane, dir / ("a" + tag + ".pgm"), depth);
            const auto once = load_image(dir / ("a" + tag + ".pgm"));
            save_pgm(once.r, dir / ("b" + tag + ".pgm"), depth);
            ASSERT_EQ(load_image(dir / ("b" + tag + ".pgm")), once);
            for (std::size_t i = 0; i < plane.size(); ++i)
                ASSERT_NEAR(once.r.samples()[i], plane.samples()[i], 0.5 / ((1 << depth) - 1) + 1e-15);
        }
}

TEST(SaveImage, ClampsAndRejectsBadDepth) {
    prnu_test::TempDir dir;
    save_pgm(ImagePlane(1, 2, std::vector<double>{-0.5, 1.5}), dir / "c.pgm", 8);
    const auto img = load_image(dir / "c.pgm");
    EXPECT_EQ(img.r(0, 0), 0.0);
    EXPECT_EQ(img.r(0, 1), 1.0);
    EXPECT_THROW(save_pgm(ImagePlane(1, 1), dir / "d.pgm", 12), ArgumentError);
}

TEST(Luminance, Weights) {
    const ColorImage c = ColorImage::gray(ImagePlane(3, 3, 0.4));
    const auto lum = to_luminance(c);
    for (double v : lum.samples()) EXPECT_NEAR(v, 0.4, 1e-15);
    const ColorImage red(ImagePlane(1, 1, 1.0), ImagePlane(1, 1), ImagePlane(1, 1));
    EXPECT_DOUBLE_EQ(to_luminance(red)(0, 0), 0.299);
}

TEST(Luminance, MatchesScalarOracle) {
    std::mt19937_64 rng(5);
    const auto img = random_color(13, 9, rng);
    const auto lum = to_luminance(img);
    for (std::size_t y = 0; y < 9; ++y)
        for (std::size_t x = 0; x < 13; ++x)
            EXPECT_NEAR(lum(x, y), 0.299 * img.r(x, y) + 0.587 * img.g(x, y) + 0.114 * img.b(x, y), 1e-12);
}

TEST(Luminance, IsLinear) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(13, seed));
        const auto a = random_color(6, 5, rng), b = random_color(6, 5, rng);
        std::uniform_real_distribution<double> u(0.0, 0.5);
        const double alpha = u(rng), beta = u(rng);
        auto mix = [&](const ImagePlane& p, const ImagePlane& q) {
            ImagePlane out(p.width(), p.height());
            for (std::size_t i = 0; i < out.size(); ++i)
                out.samples()[i] = alpha * p.samples()[i] + beta * q.samples()[i];
            return out;
        };
        const auto lhs = to_luminance(ColorImage(mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)));
        const auto rhs = mix(to_luminance(a), to_luminance(b));
        for (std::size_t i = 0; i < lhs.size(); ++i) ASSERT_NEAR(lhs.samples()[i], rhs.samples()[i], 1e-12);
    }
}

TEST(Crop, IdentityAndRamp) {
    ImagePlane ramp(3, 3);
    for (std::size_t i = 0; i < 9; ++i) ramp.samples()[i] = double(i);
    EXPECT_EQ(crop(ramp, 0, 0, 3, 3), ramp);
    EXPECT_EQ(crop(ramp, 1, 1, 2, 2), ImagePlane(2, 2, std::vector<double>{4, 5, 7, 8}));
    EXPECT_THROW(crop(ramp, 2, 0, 2, 1), BoundsError);
    EXPECT_THROW(crop(ramp, 0, 0, 0, 1), BoundsError);
}

TEST(Crop, UndoesCircularShift) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(14, seed));
        const auto p = oracle::uniform_plane(20, 17, rng);
        std::uniform_int_distribution<long> d(0, 8);
        const long dx = d(rng), dy = d(rng);
        const std::size_t w = 20 - std::size_t(dx), h = 17 - std::size_t(dy);
        ASSERT_EQ(crop(circular_shift(p, dx, dy), std::size_t(dx), std::size_t(dy), w, h), crop(p, 0, 0, w, h));
    }
}

TEST(PadTo, ZerosBottomRight) {
    const ImagePlane p(2, 2, 1.0);
    const auto q = pad_to(p, 3, 4);
    EXPECT_EQ(q(1, 1), 1.0);
    EXPECT_EQ(q(2, 0), 0.0);
    EXPECT_EQ(q(0, 3), 0.0);
    EXPECT_THROW(pad_to(p, 1, 4), BoundsError);
}

TEST(Patches, Counts) {
    EXPECT_EQ(tile_patches(ImagePlane(512, 512), 128).patches.size(), 16u);
    EXPECT_EQ(tile_patches(ImagePlane(300, 300), 128).patches.size(), 4u);
    const std::size_t sizes[] = {1024, 512, 256, 128}, counts[] = {1, 4, 16, 64};
    for (int i = 0; i < 4; ++i) EXPECT_EQ(patch_count(1024, 1024, sizes[i]), counts[i]);
    EXPECT_THROW(tile_patches(ImagePlane(100, 300), 128), SizeError);
    EXPECT_THROW(tile_patches(ImagePlane(10, 10), 0), ArgumentError);
}

TEST(Patches, PartitionCoveredRegion) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(15, seed));
        std::uniform_int_distribution<std::size_t> dim(8, 90), ps(1, 8);
        const std::size_t w = dim(rng), h = dim(rng), s = ps(rng);
        const auto grid = tile_patches(ImagePlane(w, h), s);
        std::vector<int> hits(w * h, 0);
        for (const auto& p : grid.patches)
            for (std::size_t y = p.y; y < p.y + s; ++y)
                for (std::size_t x = p.x; x < p.x + s; ++x) ++hits[y * w + x];
        const std::size_t cw = w / s * s, ch = h / s * s;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) ASSERT_EQ(hits[y * w + x], (x < cw && y < ch) ? 1 : 0);
    }
}

TEST(PlaneView, Materialize) {
    ImagePlane p(4, 4);
    for (std::size_t i = 0; i < 16; ++i) p.samples()[i] = double(i);
    const PlaneView v{&p, 1, 2, 2, 2};
    EXPECT_EQ(v.materialize(), crop(p, 1, 2, 2, 2));
}
