#ifndef KGTS_PROBLEM_HPP
#define KGTS_PROBLEM_HPP

#include <functional>

#include "kgts/common.hpp"

namespace kgts {

enum class NonlinKind { cubic_modulus, cubic_real, custom };

/// Nonlinearity f with directional (R-linear) derivatives and potential H1.
/// The built-ins are f(u) = |u|^2 u with H1 = |u|^4/2 and f(u) = u^3 with
/// H1 = u^4/4. Custom triples are validated against finite differences by the
/// test suite, which is the ground truth for the derivative conventions.
struct Nonlinearity {
    NonlinKind kind = NonlinKind::cubic_modulus;
    std::function<Cplx(Cplx)> f;
    std::function<Cplx(Cplx, Cplx)> df;        // df(u, w): derivative at u in direction w
    std::function<Cplx(Cplx, Cplx, Cplx)> d2f; // symmetric bilinear second derivative
    std::function<double(Cplx)> h1;            // potential, f = grad H1
};

inline Nonlinearity cubic_modulus_nonlinearity() {
    Nonlinearity n;
    n.kind = NonlinKind::cubic_modulus;
    n.f = [](Cplx u) { return std::norm(u) * u; };
    n.df = [](Cplx u, Cplx w) { return 2.0 * std::norm(u) * w + u * u * std::conj(w); };
    n.d2f = [](Cplx u, Cplx w1, Cplx w2) {
        return 2.0 * (u * std::conj(w1) * w2 + std::conj(u) * w1 * w2 + u * w1 * std::conj(w2));
    };
    n.h1 = [](Cplx u) {
        const double a = std::norm(u);
        return 0.5 * a * a;
    };
    return n;
}

inline Nonlinearity cubic_real_nonlinearity() {
    Nonlinearity n;
    n.kind = NonlinKind::cubic_real;
    n.f = [](Cplx u) { return u * u * u; };
    n.df = [](Cplx u, Cplx w) { return 3.0 * u * u * w; };
    n.d2f = [](Cplx u, Cplx w1, Cplx w2) { return 6.0 * u * w1 * w2; };
    n.h1 = [](Cplx u) { return 0.25 * (u * u * u * u).real(); };
    return n;
}

/// Problem data for the oscillatory Klein-Gordon system: the small parameter
/// eps, the coupling lambda, the nonlinearity, initial data psi1/psi2 as
/// functions of x, and the frequency-operator exponent a in
/// phi = sqrt(1 + eps^a k^2).
struct ProblemSpec {
    double eps = 0.5;
    double lambda = -1.0;
    Nonlinearity nonlin = cubic_modulus_nonlinearity();
    std::function<Cplx(double)> psi1;
    std::function<Cplx(double)> psi2;
    int freq_exponent = 1;
    double guard = 1e6;  // divergence threshold on field sup-norms

    void validate() const {
        if (!(eps > 0.0) || eps > 1.0)
            throw std::invalid_argument("ProblemSpec: eps must be in (0, 1]");
        if (freq_exponent != 1 && freq_exponent != 2)
            throw std::invalid_argument("ProblemSpec: freq_exponent must be 1 or 2");
        if (!psi1 || !psi2) throw std::invalid_argument("ProblemSpec: missing initial data");
    }
};

/// The test problem: lambda = -1, f(u) = |u|^2 u,
/// psi1 = 3 sin(x) / (e^{x^2/2} + e^{-x^2/2}), psi2 = 2 e^{-x^2} / sqrt(pi),
/// frequency exponent a = 1.
inline ProblemSpec default_problem(double eps) {
    ProblemSpec s;
    s.eps = eps;
    s.lambda = -1.0;
    s.nonlin = cubic_modulus_nonlinearity();
    s.psi1 = [](double x) { return Cplx(3.0 * std::sin(x) / (std::exp(x * x / 2.0) + std::exp(-x * x / 2.0)), 0.0); };
    s.psi2 = [](double x) { return Cplx(2.0 * std::exp(-x * x) / std::sqrt(kPi), 0.0); };
    s.freq_exponent = 1;
    return s;
}

}  // namespace kgts

#endif
