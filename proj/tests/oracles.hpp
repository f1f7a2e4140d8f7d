// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

// Slow, direct reference implementations used to check the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "prnu/image.hpp"

namespace prnu::oracle {

inline ImagePlane random_plane(std::size_t w, std::size_t h, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    ImagePlane p(w, h);
    for (double& v : p.samples()) v = n(rng);
    return p;
}

inline ImagePlane uniform_plane(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = 0.0,
                                double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    ImagePlane p(w, h);
    for (double& v : p.samples()) v = u(rng);
    return p;
}

/// out(s) = sum_x (a(x) - mean a) (b(x + s mod n) - mean b), row-major.
inline std::vector<double> brute_cross_correlation(const ImagePlane& a, const ImagePlane& b) {
    const std::size_t w = a.width(), h = a.height();
    double ma = 0, mb = 0;
    for (double v : a.samples()) ma += v;
    for (double v : b.samples()) mb += v;
    ma /= double(w * h);
    mb /= double(w * h);
    std::vector<double> out(w * h, 0.0);
    for (std::size_t sy = 0; sy < h; ++sy)
        for (std::size_t sx = 0; sx < w; ++sx) {
            double acc = 0;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    acc += (a(x, y) - ma) * (b((x + sx) % w, (y + sy) % h) - mb);
            out[sy * w + sx] = acc;
        }
    return out;
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half.
inline double mann_whitney_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (double(pos.size()) * double(neg.size()));
}

/// Score sets with deliberate ties (values rounded to a coarse grid).
inline std::pair<std::vector<double>, std::vector<double>> random_score_sets(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(1, 60);
    std::normal_distribution<double> n(0.0, 1.0);
    std::bernoulli_distribution coarse(0.5);
    const bool round = coarse(rng);
    auto draw = [&](double shift) {
        std::vector<double> v(static_cast<std::size_t>(count(rng)));
        for (double& x : v) {
            x = n(rng) + shift;
            if (round) x = std::round(x * 4.0) / 4.0;
        }
        return v;
    };
    auto pos = draw(1.0);
    auto neg = draw(0.0);
    return {pos, neg};
}

inline std::size_t mirror(long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return static_cast<std::size_t>(i);
}

/// Direct 2-D Gaussian convolution with half-sample symmetric extension.
inline ImagePlane gaussian_2d(const ImagePlane& p, double sigma) {
    const long r = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k;
    double sum = 0;
    for (long i = -r; i <= r; ++i) sum += std::exp(-0.5 * double(i * i) / (sigma * sigma));
    const long w = long(p.width()), h = long(p.height());
    ImagePlane out(p.width(), p.height());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double acc = 0;
            for (long j = -r; j <= r; ++j)
                for (long i = -r; i <= r; ++i)
                    acc += std::exp(-0.5 * double(i * i + j * j) / (sigma * sigma)) * p(mirror(x + i, w), mirror(y + j, h));
            out(std::size_t(x), std::size_t(y)) = acc / (sum * sum);
        }
    return out;
}

} // namespace prnu::oracle
