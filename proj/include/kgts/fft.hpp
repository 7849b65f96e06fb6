#ifndef KGTS_FFT_HPP
#define KGTS_FFT_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

#include "kgts/common.hpp"

namespace kgts {

/// Precomputed DFT plan. Radix-2 for power-of-two sizes, direct summation
/// otherwise (any size works; only power-of-two sizes are fast, and these
/// are the sizes used in practice). Immutable after construction, so plans
/// can be shared freely between threads.
///
/// Conventions: forward applies e^{-2 pi i jk/n}, inverse e^{+2 pi i jk/n};
/// neither is scaled, callers divide by n where a true coefficient
/// normalization is wanted.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), pow2_(n > 0 && (n & (n - 1)) == 0) {
        if (n_ == 0) throw std::invalid_argument("FftPlan: size must be positive");
        roots_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            const double a = -kTwoPi * static_cast<double>(j) / static_cast<double>(n_);
            roots_[j] = Cplx(std::cos(a), std::sin(a));
        }
        if (pow2_) {
            rev_.resize(n_);
            std::size_t bits = 0;
            while ((std::size_t{1} << bits) < n_) ++bits;
            for (std::size_t i = 0; i < n_; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < bits; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
                rev_[i] = r;
            }
        }
    }

    std::size_t size() const { return n_; }

    void forward(Cplx* data) const { transform(data, 1, false); }
    void inverse(Cplx* data) const { transform(data, 1, true); }

    /// Transform an n-by-width row-major array along its first (row) axis,
    /// i.e. `width` independent DFTs over strided columns. The inner loops
    /// run over the contiguous width dimension.
    void forward_rows(Cplx* data, std::size_t width) const { transform(data, width, false); }
    void inverse_rows(Cplx* data, std::size_t width) const { transform(data, width, true); }

private:
    void transform(Cplx* data, std::size_t width, bool inv) const {
        if (n_ == 1) return;
        if (!pow2_) {
            direct(data, width, inv);
            return;
        }
        for (std::size_t i = 0; i < n_; ++i)
            if (i < rev_[i])
                std::swap_ranges(data + i * width, data + (i + 1) * width, data + rev_[i] * width);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len >> 1;
            const std::size_t step = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    Cplx w = roots_[j * step];
                    if (inv) w = std::conj(w);
                    Cplx* a = data + (start + j) * width;
                    Cplx* b = data + (start + j + half) * width;
                    for (std::size_t c = 0; c < width; ++c) {
                        const Cplx t = w * b[c];
                        b[c] = a[c] - t;
                        a[c] = a[c] + t;
                    }
                }
            }
        }
    }

    void direct(Cplx* data, std::size_t width, bool inv) const {
        std::vector<Cplx> out(n_ * width, Cplx(0.0, 0.0));
        for (std::size_t k = 0; k < n_; ++k) {
            for (std::size_t j = 0; j < n_; ++j) {
                Cplx w = roots_[(j * k) % n_];
                if (inv) w = std::conj(w);
                const Cplx* src = data + j * width;
                Cplx* dst = out.data() + k * width;
                for (std::size_t c = 0; c < width; ++c) dst[c] += w * src[c];
            }
        }
        std::copy(out.begin(), out.end(), data);
    }

    std::size_t n_;
    bool pow2_;
    std::vector<std::size_t> rev_;
    std::vector<Cplx> roots_;
};

}  // namespace kgts

#endif
