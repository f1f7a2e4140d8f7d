// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Thin RAII wrapper over FFTW's 2-D real transforms. Plans are created once
/// per size under a lock (FFTW's planner is not thread-safe) and executed on
/// caller-owned buffers via the new-array interface.

#pragma once

#include <complex>
#include <cstddef>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "prnu/error.hpp"

namespace prnu::fft {

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) {
    auto* p = fftw_alloc_real(n);
    if (!p) throw std::bad_alloc();
    return RealBuffer(p);
}
inline ComplexBuffer alloc_complex(std::size_t n) {
    auto* p = fftw_alloc_complex(n);
    if (!p) throw std::bad_alloc();
    return ComplexBuffer(p);
}

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan forward(std::size_t w, std::size_t h) { return get(w, h, true); }
    fftw_plan inverse(std::size_t w, std::size_t h) { return get(w, h, false); }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    fftw_plan get(std::size_t w, std::size_t h, bool fwd) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(w, h, fwd);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto real = alloc_real(w * h);
        auto cplx = alloc_complex(h * (w / 2 + 1));
        fftw_plan plan = fwd ? fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w), real.get(),
                                                    cplx.get(), FFTW_ESTIMATE)
                             : fftw_plan_dft_c2r_2d(static_cast<int>(h), static_cast<int>(w), cplx.get(),
                                                    real.get(), FFTW_ESTIMATE);
        if (!plan) throw Error("FFTW planning failed");
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

} // namespace detail

/// Half-spectrum of a w x h real row-major signal: h rows of (w/2 + 1) bins.
class Spectrum {
public:
    Spectrum(std::size_t w, std::size_t h) : w_(w), h_(h), bins_(alloc_complex(h * (w / 2 + 1))) {}

    std::size_t width() const noexcept { return w_; }
    std::size_t height() const noexcept { return h_; }
    std::size_t bin_count() const noexcept { return h_ * (w_ / 2 + 1); }
    fftw_complex* data() noexcept { return bins_.get(); }
    const fftw_complex* data() const noexcept { return bins_.get(); }

private:
    std::size_t w_, h_;
    ComplexBuffer bins_;
};

inline Spectrum forward(std::span<const double> signal, std::size_t w, std::size_t h) {
    if (signal.size() != w * h) throw ShapeError("fft::forward: size mismatch");
    auto in = alloc_real(w * h);
    std::memcpy(in.get(), signal.data(), w * h * sizeof(double));
    Spectrum out(w, h);
    fftw_execute_dft_r2c(detail::PlanCache::instance().forward(w, h), in.get(), out.data());
    return out;
}

/// Inverse transform, normalized so that inverse(forward(x)) == x.
/// The spectrum is consumed (c2r transforms overwrite their input).
inline std::vector<double> inverse(Spectrum&& spec) {
    const std::size_t w = spec.width(), h = spec.height();
    auto out = alloc_real(w * h);
    fftw_execute_dft_c2r(detail::PlanCache::instance().inverse(w, h), spec.data(), out.get());
    std::vector<double> result(out.get(), out.get() + w * h);
    const double scale = 1.0 / static_cast<double>(w * h);
    for (double& v : result) v *= scale;
    return result;
}

} // namespace prnu::fft
