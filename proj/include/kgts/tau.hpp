#ifndef KGTS_TAU_HPP
#define KGTS_TAU_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/fft.hpp"

namespace kgts {

/// Fourier representation of a 2pi-periodic function of the fast variable tau
/// with values in C^slots. Modes k = -n_tau/2 .. n_tau/2 are stored as rows
/// (n_tau+1 of them); the endpoint modes +-n_tau/2 follow the half-weight
/// convention: a field built from collocation data stores the aliased n_tau/2
/// DFT coefficient split equally between the two endpoint rows. Operators that
/// treat the endpoints as genuine modes +-n_tau/2 (derivative, transport) may
/// leave them unequal; collocation only ever sees their sum.
class TauField {
public:
    TauField() = default;

    TauField(std::size_t n_tau, std::size_t slots)
        : n_tau_(n_tau), slots_(slots), coeffs_((n_tau + 1) * slots, Cplx(0.0, 0.0)) {
        if (n_tau < 2 || n_tau % 2 != 0)
            throw std::invalid_argument("TauField: n_tau must be even and >= 2");
        if (slots == 0) throw std::invalid_argument("TauField: slots must be positive");
    }

    std::size_t n_tau() const { return n_tau_; }
    std::size_t slots() const { return slots_; }
    std::size_t rows() const { return n_tau_ + 1; }

    /// Integer tau-mode carried by row r.
    int mode(std::size_t r) const { return static_cast<int>(r) - static_cast<int>(n_tau_ / 2); }

    Cplx* row(std::size_t r) { return coeffs_.data() + r * slots_; }
    const Cplx* row(std::size_t r) const { return coeffs_.data() + r * slots_; }

    Cplx& operator()(std::size_t r, std::size_t s) { return coeffs_[r * slots_ + s]; }
    const Cplx& operator()(std::size_t r, std::size_t s) const { return coeffs_[r * slots_ + s]; }

    std::vector<Cplx>& data() { return coeffs_; }
    const std::vector<Cplx>& data() const { return coeffs_; }

private:
    std::size_t n_tau_ = 0;
    std::size_t slots_ = 0;
    std::vector<Cplx> coeffs_;
};

/// Pi: projection onto the tau-mean. Zeroes every mode but k = 0.
inline TauField tau_project(const TauField& f) {
    TauField out(f.n_tau(), f.slots());
    const std::size_t r0 = f.n_tau() / 2;
    for (std::size_t s = 0; s < f.slots(); ++s) out(r0, s) = f(r0, s);
    return out;
}

/// L = d/dtau: mode k multiplied by ik.
inline TauField tau_derivative(const TauField& f) {
    TauField out(f.n_tau(), f.slots());
    for (std::size_t r = 0; r < f.rows(); ++r) {
        const Cplx ik(0.0, static_cast<double>(f.mode(r)));
        const Cplx* src = f.row(r);
        Cplx* dst = out.row(r);
        for (std::size_t s = 0; s < f.slots(); ++s) dst[s] = ik * src[s];
    }
    return out;
}

/// A = L^{-1}(I - Pi): mode k != 0 divided by ik, mean set to zero. Exact as a
/// Fourier multiplier, which makes Pi A = 0 and L A = I - Pi hold identically.
inline TauField tau_antiderivative(const TauField& f) {
    TauField out(f.n_tau(), f.slots());
    for (std::size_t r = 0; r < f.rows(); ++r) {
        const int k = f.mode(r);
        if (k == 0) continue;
        const Cplx inv_ik = Cplx(0.0, -1.0 / static_cast<double>(k));
        const Cplx* src = f.row(r);
        Cplx* dst = out.row(r);
        for (std::size_t s = 0; s < f.slots(); ++s) dst[s] = inv_ik * src[s];
    }
    return out;
}

/// Values at the collocation points tau_j = 2 pi j / n_tau, j = 0..n_tau-1,
/// returned as an n_tau-by-slots row-major array. The endpoint rows alias to
/// the same collocation exponential, so only their sum enters.
inline std::vector<Cplx> tau_to_collocation(const TauField& f, const FftPlan& plan) {
    const std::size_t n = f.n_tau();
    const std::size_t slots = f.slots();
    if (plan.size() != n) throw std::invalid_argument("tau_to_collocation: plan size mismatch");
    std::vector<Cplx> bins(n * slots);
    const std::size_t half = n / 2;
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t r = b < half ? b + half : b - half;  // bin b holds mode b or b-n
        const Cplx* src = f.row(r);
        Cplx* dst = bins.data() + b * slots;
        if (b == half) {
            const Cplx* hi = f.row(n);  // +n/2 row joins the -n/2 row in bin n/2
            for (std::size_t s = 0; s < slots; ++s) dst[s] = src[s] + hi[s];
        } else {
            for (std::size_t s = 0; s < slots; ++s) dst[s] = src[s];
        }
    }
    plan.inverse_rows(bins.data(), slots);
    return bins;
}

inline std::vector<Cplx> tau_to_collocation(const TauField& f) {
    return tau_to_collocation(f, FftPlan(f.n_tau()));
}

/// Inverse of tau_to_collocation, splitting the aliased n_tau/2 coefficient
/// equally between the endpoint rows.
inline TauField collocation_to_tau(std::span<const Cplx> values, std::size_t n_tau,
                                   std::size_t slots, const FftPlan& plan) {
    if (values.size() != n_tau * slots)
        throw std::invalid_argument("collocation_to_tau: size mismatch");
    if (plan.size() != n_tau)
        throw std::invalid_argument("collocation_to_tau: plan size mismatch");
    std::vector<Cplx> bins(values.begin(), values.end());
    plan.forward_rows(bins.data(), slots);
    const double scale = 1.0 / static_cast<double>(n_tau);
    TauField out(n_tau, slots);
    const std::size_t half = n_tau / 2;
    for (std::size_t b = 0; b < n_tau; ++b) {
        const Cplx* src = bins.data() + b * slots;
        if (b == half) {
            Cplx* lo = out.row(0);
            Cplx* hi = out.row(n_tau);
            for (std::size_t s = 0; s < slots; ++s) {
                const Cplx c = 0.5 * scale * src[s];
                lo[s] = c;
                hi[s] = c;
            }
        } else {
            Cplx* dst = out.row(b < half ? b + half : b - half);
            for (std::size_t s = 0; s < slots; ++s) dst[s] = scale * src[s];
        }
    }
    return out;
}

inline TauField collocation_to_tau(std::span<const Cplx> values, std::size_t n_tau,
                                   std::size_t slots) {
    return collocation_to_tau(values, n_tau, slots, FftPlan(n_tau));
}

/// Evaluate the tau-Fourier series at an arbitrary tau (reduced mod 2pi in
/// extended precision), honoring the stored endpoint rows as genuine modes.
inline std::vector<Cplx> tau_eval(const TauField& f, double tau) {
    const double tr = phase_mod_two_pi(tau);
    std::vector<Cplx> out(f.slots(), Cplx(0.0, 0.0));
    for (std::size_t r = 0; r < f.rows(); ++r) {
        const double kt = static_cast<double>(f.mode(r)) * tr;
        const Cplx ph(std::cos(kt), std::sin(kt));
        const Cplx* src = f.row(r);
        for (std::size_t s = 0; s < f.slots(); ++s) out[s] += ph * src[s];
    }
    return out;
}

inline double sup_norm(const TauField& f) { return sup_norm(f.data()); }

// Small linear-algebra helpers used when composing tau-operators.

inline TauField& axpy(TauField& y, Cplx alpha, const TauField& x) {
    for (std::size_t i = 0; i < y.data().size(); ++i) y.data()[i] += alpha * x.data()[i];
    return y;
}

inline TauField scaled(const TauField& x, Cplx alpha) {
    TauField out = x;
    for (Cplx& z : out.data()) z *= alpha;
    return out;
}

}  // namespace kgts

#endif
