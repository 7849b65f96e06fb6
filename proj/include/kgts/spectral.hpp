#ifndef KGTS_SPECTRAL_HPP
#define KGTS_SPECTRAL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/fft.hpp"

namespace kgts {

/// Equispaced collocation grid on (-pi, pi): x_j = -pi + 2 pi j / n.
/// `wavenumbers[m]` is the integer wavenumber carried by FFT bin m, running
/// through -n/2 .. n/2-1 in standard bin order.
struct SpatialGrid {
    std::size_t n = 0;
    std::vector<double> points;
    std::vector<int> wavenumbers;

    explicit SpatialGrid(std::size_t n_x) : n(n_x) {
        if (n < 4 || n % 2 != 0)
            throw std::invalid_argument("SpatialGrid: n_x must be even and >= 4");
        points.resize(n);
        wavenumbers.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            points[j] = -kPi + kTwoPi * static_cast<double>(j) / static_cast<double>(n);
            wavenumbers[j] = j < n / 2 ? static_cast<int>(j)
                                       : static_cast<int>(j) - static_cast<int>(n);
        }
    }
};

/// Fourier coefficients (w.r.t. e^{ikx} on (-pi,pi), bin order) from values
/// sampled at grid.points. Normalized so a constant field c maps to
/// coefficient c at k=0. The internal FFT works on the 0-based circle grid,
/// which is the same point set rotated by n/2 positions.
inline std::vector<Cplx> to_coeffs(const SpatialGrid& grid, const FftPlan& plan,
                                   std::span<const Cplx> values) {
    const std::size_t n = grid.n;
    if (values.size() != n || plan.size() != n)
        throw std::invalid_argument("to_coeffs: size mismatch");
    std::vector<Cplx> buf(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] = values[(j + n / 2) % n];
    plan.forward(buf.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (Cplx& z : buf) z *= scale;
    return buf;
}

/// Inverse of to_coeffs: values at grid.points from bin-order coefficients.
inline std::vector<Cplx> to_values(const SpatialGrid& grid, const FftPlan& plan,
                                   std::span<const Cplx> coeffs) {
    const std::size_t n = grid.n;
    if (coeffs.size() != n || plan.size() != n)
        throw std::invalid_argument("to_values: size mismatch");
    std::vector<Cplx> buf(coeffs.begin(), coeffs.end());
    plan.inverse(buf.data());
    std::vector<Cplx> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf[(j + n / 2) % n];
    return out;
}

/// Second-order Fourier differentiation matrix approximating -Laplace
/// (positive semi-definite, symmetric, eigenvalues k^2). Entries
///   a_kj = (-1)^{k+j} / (2 sin^2((k-j) pi / n))   for k != j,
///   a_kk = n^2/12 + 1/6.
inline std::vector<double> fourier_diff_matrix(std::size_t n_x) {
    if (n_x < 4 || n_x % 2 != 0)
        throw std::invalid_argument("fourier_diff_matrix: n_x must be even and >= 4");
    const double n = static_cast<double>(n_x);
    std::vector<double> a(n_x * n_x);
    for (std::size_t k = 0; k < n_x; ++k) {
        for (std::size_t j = 0; j < n_x; ++j) {
            if (k == j) {
                a[k * n_x + j] = n * n / 12.0 + 1.0 / 6.0;
            } else {
                const double d = static_cast<double>(k) - static_cast<double>(j);
                const double s = std::sin(d * kPi / n);
                const double sign = ((k + j) % 2 == 0) ? 1.0 : -1.0;
                a[k * n_x + j] = sign / (2.0 * s * s);
            }
        }
    }
    return a;
}

/// Diagonal frequency multipliers phi_m = sqrt(1 + eps^a k_m^2), the Fourier
/// symbol of sqrt(1 - eps^2 Laplace) (a=2) or of the test operator
/// sqrt(I + eps A) (a=1).
struct PhaseOperator {
    double eps = 0.0;
    int exponent = 2;
    std::vector<double> freqs;  // per FFT bin

    PhaseOperator() = default;

    PhaseOperator(const SpatialGrid& grid, double eps_, int exponent_)
        : eps(eps_), exponent(exponent_) {
        if (eps <= 0.0) throw std::invalid_argument("PhaseOperator: eps must be positive");
        if (exponent != 1 && exponent != 2)
            throw std::invalid_argument("PhaseOperator: exponent must be 1 or 2");
        const double ea = exponent == 1 ? eps : eps * eps;
        freqs.resize(grid.n);
        for (std::size_t m = 0; m < grid.n; ++m) {
            const double k = static_cast<double>(grid.wavenumbers[m]);
            freqs[m] = std::sqrt(1.0 + ea * k * k);
        }
    }
};

enum class TrigKind { cos, sin, inv, id };

/// Mode-wise multiplication by cos(phase*phi_m), sin(phase*phi_m), 1/phi_m or 1.
/// The phase product is reduced mod 2pi in extended precision before the trig
/// evaluation so long-horizon reconstruction phases stay accurate.
inline std::vector<Cplx> apply_trig(const PhaseOperator& op, TrigKind kind, double phase,
                                    std::span<const Cplx> field) {
    if (field.size() != op.freqs.size())
        throw std::invalid_argument("apply_trig: size mismatch");
    std::vector<Cplx> out(field.size());
    for (std::size_t m = 0; m < field.size(); ++m) {
        double w = 1.0;
        switch (kind) {
            case TrigKind::cos: w = std::cos(phase_mod_two_pi(phase, op.freqs[m])); break;
            case TrigKind::sin: w = std::sin(phase_mod_two_pi(phase, op.freqs[m])); break;
            case TrigKind::inv: w = 1.0 / op.freqs[m]; break;
            case TrigKind::id: w = 1.0; break;
        }
        out[m] = w * field[m];
    }
    return out;
}

/// Discrete H^s norm on Fourier coefficients: (sum_k (1+k^2)^s |w_k|^2)^{1/2}.
inline double sobolev_norm(const SpatialGrid& grid, std::span<const Cplx> coeffs, int s) {
    if (coeffs.size() != grid.n) throw std::invalid_argument("sobolev_norm: size mismatch");
    if (s < 0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
    double sum = 0.0;
    for (std::size_t m = 0; m < grid.n; ++m) {
        const double k = static_cast<double>(grid.wavenumbers[m]);
        double w = 1.0;
        for (int i = 0; i < s; ++i) w *= 1.0 + k * k;
        sum += w * std::norm(coeffs[m]);
    }
    return std::sqrt(sum);
}

}  // namespace kgts

#endif
