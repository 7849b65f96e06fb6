#ifndef KGTS_ISV_HPP
#define KGTS_ISV_HPP

#include <cstddef>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/twoscale.hpp"

namespace kgts {

/// State of the second-order oscillatory system Z'' + Omega^2 Z = g(Z) in the
/// re-scaled time, Z and Z' as spatial Fourier coefficient vectors.
struct SecondOrderState {
    std::vector<Cplx> z, zt;
    double t = 0.0;
};

namespace detail {
inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 : std::sin(x) / x; }
}  // namespace detail

/// Filter tables for the improved Stormer-Verlet trigonometric step at a fixed
/// h: Omega = Phi/eps, position filter psi = sinc^2(h Omega / 2) and the
/// symmetric velocity pair psi1 = psi / sinc(h Omega), psi0 = cos(h Omega) psi1,
/// which makes step(h) followed by step(-h) the exact identity.
struct IsvCoeffs {
    double h = 0.0;
    std::vector<double> omega, cos_h, sin_h, psi, psi0, psi1;

    IsvCoeffs(const PhaseOperator& phase, double h_) : h(h_) {
        const std::size_t n = phase.freqs.size();
        omega.resize(n);
        cos_h.resize(n);
        sin_h.resize(n);
        psi.resize(n);
        psi0.resize(n);
        psi1.resize(n);
        for (std::size_t m = 0; m < n; ++m) {
            omega[m] = phase.freqs[m] / phase.eps;
            const double xi = h * omega[m];
            cos_h[m] = std::cos(xi);
            sin_h[m] = std::sin(xi);
            psi[m] = detail::sinc(0.5 * xi) * detail::sinc(0.5 * xi);
            psi1[m] = detail::sinc(0.5 * xi) / std::cos(0.5 * xi);
            psi0[m] = cos_h[m] * psi1[m];
        }
    }
};

namespace detail {
// ghat = transform of -lambda f(Z), the right-hand side of the second-order
// form of the filtered system.
inline std::vector<Cplx> isv_rhs(const TwoScaleContext& ctx, const std::vector<Cplx>& zhat) {
    std::vector<Cplx> g = zhat;
    ctx.plan_x().inverse(g.data());
    double peak = 0.0;
    for (Cplx& u : g) {
        peak = std::max(peak, std::abs(u));
        u = -ctx.spec().lambda * ctx.spec().nonlin.f(u);
    }
    if (!(peak <= ctx.spec().guard))
        throw DivergenceError("isv: field magnitude " + std::to_string(peak) +
                              " exceeds divergence guard");
    ctx.plan_x().forward(g.data());
    const double s = 1.0 / static_cast<double>(ctx.n_x());
    for (Cplx& u : g) u *= s;
    return g;
}
}  // namespace detail

/// One step of the Gautschi-type trigonometric integrator:
///   Z_{n+1}  = cos(hW) Z_n + W^{-1} sin(hW) Z'_n + (h^2/2) psi g(Z_n)
///   Z'_{n+1} = -W sin(hW) Z_n + cos(hW) Z'_n + (h/2)(psi0 g(Z_n) + psi1 g(Z_{n+1}))
/// applied directly to the oscillatory system, no two-scale machinery.
inline SecondOrderState isv_step(const TwoScaleContext& ctx, const IsvCoeffs& c,
                                 const SecondOrderState& s) {
    const std::size_t n = ctx.n_x();
    const double h = c.h;
    std::vector<Cplx> g0 = detail::isv_rhs(ctx, s.z);
    SecondOrderState out;
    out.z.resize(n);
    out.zt.resize(n);
    out.t = s.t + h;
    for (std::size_t m = 0; m < n; ++m)
        out.z[m] = c.cos_h[m] * s.z[m] + c.sin_h[m] / c.omega[m] * s.zt[m] +
                   0.5 * h * h * c.psi[m] * g0[m];
    std::vector<Cplx> g1 = detail::isv_rhs(ctx, out.z);
    for (std::size_t m = 0; m < n; ++m)
        out.zt[m] = -c.omega[m] * c.sin_h[m] * s.z[m] + c.cos_h[m] * s.zt[m] +
                    0.5 * h * (c.psi0[m] * g0[m] + c.psi1[m] * g1[m]);
    return out;
}

/// Initial data Z(0) = psi1_hat, Z'(0) = psi2_hat / eps.
inline SecondOrderState isv_initial(const TwoScaleContext& ctx) {
    const std::size_t n = ctx.n_x();
    std::vector<Cplx> s1(n), s2(n);
    for (std::size_t j = 0; j < n; ++j) {
        s1[j] = ctx.spec().psi1(ctx.grid().points[j]);
        s2[j] = ctx.spec().psi2(ctx.grid().points[j]);
    }
    SecondOrderState st;
    st.z = to_coeffs(ctx.grid(), ctx.plan_x(), s1);
    st.zt = to_coeffs(ctx.grid(), ctx.plan_x(), s2);
    for (Cplx& u : st.zt) u /= ctx.spec().eps;
    st.t = 0.0;
    return st;
}

/// Iterate isv_step to t_end, collecting states at the given cadence
/// (cadence 0 keeps only the endpoints). The final state is always recorded.
inline std::vector<SecondOrderState> isv_solve(const TwoScaleContext& ctx, double h, double t_end,
                                               std::size_t cadence = 1) {
    if (!(h > 0.0)) throw std::invalid_argument("isv_solve: h must be positive");
    const long n_steps = std::lround(t_end / h);
    IsvCoeffs coeffs(ctx.phase(), h);
    SecondOrderState s = isv_initial(ctx);
    std::vector<SecondOrderState> traj;
    traj.push_back(s);
    for (long n = 1; n <= n_steps; ++n) {
        s = isv_step(ctx, coeffs, s);
        s.t = h * static_cast<double>(n);
        if (n == n_steps || (cadence != 0 && n % static_cast<long>(cadence) == 0))
            traj.push_back(s);
    }
    return traj;
}

}  // namespace kgts

#endif
