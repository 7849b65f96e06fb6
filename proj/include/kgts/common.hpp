#ifndef KGTS_COMMON_HPP
#define KGTS_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgts {

using Cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

/// Thrown when a nonlinear stage solve exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Thrown when field magnitudes exceed the divergence guard.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// (phase * freq) mod 2pi, accumulated in extended precision so that
/// reconstruction phases stay accurate for n*h/eps up to 1e6. Result in [-pi, pi].
inline double phase_mod_two_pi(double phase, double freq = 1.0) {
    const long double two_pi = 6.283185307179586476925286766559006L;
    const long double p = static_cast<long double>(phase) * static_cast<long double>(freq);
    return static_cast<double>(std::remainderl(p, two_pi));
}

inline double sup_norm(std::span<const Cplx> v) {
    double m = 0.0;
    for (const Cplx& z : v) m = std::max(m, std::abs(z));
    return m;
}

inline double sup_norm(const std::vector<Cplx>& v) {
    return sup_norm(std::span<const Cplx>(v));
}

}  // namespace kgts

#endif
