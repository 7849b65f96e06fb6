#ifndef KGTS_TWOSCALE_HPP
#define KGTS_TWOSCALE_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/problem.hpp"
#include "kgts/spectral.hpp"
#include "kgts/tau.hpp"

namespace kgts {

/// Filtered unknowns (q,p) / (U,V) as spatial Fourier coefficient vectors.
/// Stacked into a TauField they occupy slots [0, n_x) and [n_x, 2 n_x).
struct FilteredState {
    std::vector<Cplx> u, v;

    FilteredState() = default;
    FilteredState(std::size_t n_x) : u(n_x, Cplx(0, 0)), v(n_x, Cplx(0, 0)) {}
};

/// Reusable scratch for the collocation nonlinearity pipeline.
struct GammaScratch {
    std::vector<Cplx> work;  // n_tau x 2 n_x collocation panel
    std::vector<Cplx> gbuf;  // n_x
};

/// Two-scale machinery bound once per run: grid, frequency operator, FFT
/// plans and the collocation phase tables. Immutable after construction.
///
/// The fast phase carried by the tau-torus is the exactly 2pi-periodic scalar
/// e^{i tau}; the dispersive remainder of the frequency operator,
///   D_m = (phi_m - 1)/eps   (bounded uniformly in eps),
/// stays with the slow variables and is integrated exactly inside the
/// scheme's linear part. Factoring e^{i t phi/eps} = e^{i t/eps} e^{i t D}
/// is an algebraic identity, so nothing is approximated; it is what keeps the
/// torus formulation consistent when the phi_m are not integers.
class TwoScaleContext {
public:
    TwoScaleContext(ProblemSpec spec, std::size_t n_x, std::size_t n_tau)
        : spec_(std::move(spec)),
          grid_(n_x),
          phase_(grid_, spec_.eps, spec_.freq_exponent),
          n_tau_(n_tau),
          plan_x_(n_x),
          plan_tau_(n_tau) {
        spec_.validate();
        if (n_tau_ < 4 || n_tau_ % 2 != 0)
            throw std::invalid_argument("TwoScaleContext: n_tau must be even and >= 4");
        inv_phi_.resize(n_x);
        disp_.resize(n_x);
        const double ea = spec_.freq_exponent == 1 ? spec_.eps : spec_.eps * spec_.eps;
        for (std::size_t m = 0; m < n_x; ++m) {
            inv_phi_[m] = 1.0 / phase_.freqs[m];
            // (sqrt(1 + ea k^2) - 1)/eps without cancellation
            const double k = static_cast<double>(grid_.wavenumbers[m]);
            disp_[m] = ea * k * k / (spec_.eps * (phase_.freqs[m] + 1.0));
        }
        cos_tau_.resize(n_tau_);
        sin_tau_.resize(n_tau_);
        for (std::size_t j = 0; j < n_tau_; ++j) {
            const double tau = kTwoPi * static_cast<double>(j) / static_cast<double>(n_tau_);
            cos_tau_[j] = std::cos(tau);
            sin_tau_[j] = std::sin(tau);
        }
    }

    const ProblemSpec& spec() const { return spec_; }
    const SpatialGrid& grid() const { return grid_; }
    const PhaseOperator& phase() const { return phase_; }
    std::size_t n_x() const { return grid_.n; }
    std::size_t n_tau() const { return n_tau_; }
    std::size_t slots() const { return 2 * grid_.n; }
    const FftPlan& plan_x() const { return plan_x_; }
    const FftPlan& plan_tau() const { return plan_tau_; }
    /// Dispersive remainder (phi_m - 1)/eps per spatial bin.
    const std::vector<double>& dispersion() const { return disp_; }

    /// Filtered initial data: q0 = Phi psi1_hat, p0 = psi2_hat.
    FilteredState initial_qp() const {
        const std::size_t n = grid_.n;
        std::vector<Cplx> s1(n), s2(n);
        for (std::size_t j = 0; j < n; ++j) {
            s1[j] = spec_.psi1(grid_.points[j]);
            s2[j] = spec_.psi2(grid_.points[j]);
        }
        FilteredState out(n);
        out.u = to_coeffs(grid_, plan_x_, s1);
        out.v = to_coeffs(grid_, plan_x_, s2);
        for (std::size_t m = 0; m < n; ++m) out.u[m] *= phase_.freqs[m];
        return out;
    }

    /// The two-scale nonlinearity G_tau(X) at a single tau, eps factors
    /// included: [-eps sin(tau) w_hat ; eps cos(tau) w_hat] with
    /// w = -lambda f(Phi^{-1}[cos(tau) U + sin(tau) V]).
    FilteredState g_tau(const FilteredState& x, double tau) const {
        const double tr = phase_mod_two_pi(tau);
        const double ct = std::cos(tr), st = std::sin(tr);
        std::vector<Cplx> what = inner_values(x, ct, st);
        apply_f_scaled(what.data(), grid_.n, -spec_.lambda);
        plan_x_.forward(what.data());
        FilteredState out(grid_.n);
        const double inv_n = 1.0 / static_cast<double>(grid_.n);
        for (std::size_t m = 0; m < grid_.n; ++m) {
            const Cplx wm = inv_n * what[m];
            out.u[m] = -spec_.eps * st * wm;
            out.v[m] = spec_.eps * ct * wm;
        }
        return out;
    }

    /// Directional derivative of g_tau at x in direction w (exact chain rule
    /// through f').
    FilteredState g_tau_jacvec(const FilteredState& x, double tau, const FilteredState& w) const {
        const double tr = phase_mod_two_pi(tau);
        const double ct = std::cos(tr), st = std::sin(tr);
        std::vector<Cplx> g = inner_values(x, ct, st);
        std::vector<Cplx> dg = inner_values(w, ct, st);
        for (std::size_t j = 0; j < grid_.n; ++j) dg[j] = -spec_.lambda * spec_.nonlin.df(g[j], dg[j]);
        plan_x_.forward(dg.data());
        return assemble(dg, ct, st);
    }

    /// Second directional derivative of g_tau (symmetric bilinear, through f'').
    FilteredState g_tau_bilinear(const FilteredState& x, double tau, const FilteredState& w1,
                                 const FilteredState& w2) const {
        const double tr = phase_mod_two_pi(tau);
        const double ct = std::cos(tr), st = std::sin(tr);
        std::vector<Cplx> g = inner_values(x, ct, st);
        std::vector<Cplx> d1 = inner_values(w1, ct, st);
        std::vector<Cplx> d2 = inner_values(w2, ct, st);
        for (std::size_t j = 0; j < grid_.n; ++j) d1[j] = -spec_.lambda * spec_.nonlin.d2f(g[j], d1[j], d2[j]);
        plan_x_.forward(d1.data());
        return assemble(d1, ct, st);
    }

    /// The eps-stripped fully discrete nonlinearity Gamma acting on tau-Fourier
    /// coefficients in the [U;V] layout: collocate in tau, apply
    /// [-sin(tau_j) w_hat_j ; cos(tau_j) w_hat_j] at each tau_j, transform
    /// back. The integrator multiplies by eps*h externally.
    void gamma_eval_into(const TauField& z, TauField& out, GammaScratch& s) const {
        gamma_impl(z, out, s, false);
    }

    TauField gamma_eval(const TauField& z) const {
        TauField out(n_tau_, slots());
        GammaScratch s;
        gamma_eval_into(z, out, s);
        return out;
    }

    /// Gamma in the diagonalized w± = U ± iV layout used by the stepper
    /// (slots [w+ (n_x); w- (n_x)]): the same nonlinearity conjugated by the
    /// basis change, g_j = Phi^{-1}(e^{-i tau_j} w+ + e^{+i tau_j} w-)/2 and
    /// output rows [ +i e^{+i tau_j} w_hat ; -i e^{-i tau_j} w_hat ].
    void gamma_pm_into(const TauField& z, TauField& out, GammaScratch& s) const {
        gamma_impl(z, out, s, true);
    }

    /// Chapman-Enskog correction kappa_order(tau, Xbar) for the tau-independent
    /// mean state Xbar, assembled term by term from the antiderivative A, the
    /// mean projection Pi and the derivatives of G_tau.
    TauField kappa(int order, const FilteredState& xbar) const {
        if (order < 1 || order > 3) throw std::invalid_argument("kappa: order must be 1, 2 or 3");
        const TauField g = g_field(xbar);
        const TauField ag = tau_antiderivative(g);
        if (order == 1) return ag;

        const TauField pg = tau_project(g);
        const TauField dg_ag = dg_field(xbar, ag);
        const TauField dg_pg = dg_field(xbar, pg);
        if (order == 2) {
            // A dG AG - A^2 dG PiG
            TauField out = tau_antiderivative(dg_ag);
            axpy(out, Cplx(-1.0, 0.0), tau_antiderivative(tau_antiderivative(dg_pg)));
            return out;
        }

        auto a1 = [](const TauField& f) { return tau_antiderivative(f); };
        auto a2 = [&](const TauField& f) { return a1(a1(f)); };
        auto a3 = [&](const TauField& f) { return a1(a2(f)); };

        TauField out = a1(dg_field(xbar, a1(dg_ag)));                        //  A dG A dG AG
        axpy(out, Cplx(-1.0, 0.0), a1(dg_field(xbar, a2(dg_pg))));           // -A dG A^2 dG PiG
        axpy(out, Cplx(0.5, 0.0), a1(d2g_field(xbar, ag, ag)));              // +1/2 A d2G(AG, AG)
        axpy(out, Cplx(-1.0, 0.0), a2(d2g_field(xbar, pg, ag)));             // -A^2 d2G(PiG, AG)
        axpy(out, Cplx(-1.0, 0.0), a2(dg_field(xbar, a1(dg_pg))));           // -A^2 dG A dG PiG
        axpy(out, Cplx(1.0, 0.0), a3(d2g_field(xbar, pg, pg)));              // +A^3 d2G(PiG, PiG)
        axpy(out, Cplx(1.0, 0.0), a3(dg_field(xbar, tau_project(dg_pg))));   // +A^3 dG Pi dG PiG
        axpy(out, Cplx(-1.0, 0.0), a2(dg_field(xbar, tau_project(dg_ag))));  // -A^2 dG Pi dG AG
        return out;
    }

    /// Chapman-Enskog corrections of the full slow vector field
    /// G_full(X) = D J X + G_tau(X), i.e. the printed kappa compositions with
    /// the (linear, tau-independent) dispersive term included in G and its
    /// derivative. The dispersive term is constant in tau, so kappa_1 and all
    /// Pi kappa_j = 0 are unchanged; it enters kappa_2 and kappa_3 through the
    /// derivative compositions. This is the preparation the integrated system
    /// actually needs: without it the datum sits O(eps^2 D) off the slow
    /// manifold and the resulting fast layer dominates the time-quadrature
    /// error at fixed h.
    TauField kappa_full(int order, const FilteredState& xbar) const {
        if (order < 1 || order > 3)
            throw std::invalid_argument("kappa_full: order must be 1, 2 or 3");
        const TauField g = g_field(xbar);  // A kills the constant DJ Xbar part
        const TauField ag = tau_antiderivative(g);
        if (order == 1) return ag;

        // Pi G_full = DJ Xbar + Pi G_nl; dG_full(W) = DJ W + dG_nl(W)
        TauField pg = tau_project(g);
        add_dispersive(pg, xbar);
        auto dgf = [&](const TauField& w) {
            TauField out = dg_field(xbar, w);
            axpy_dispersive(out, w);
            return out;
        };
        const TauField dg_ag = dgf(ag);
        const TauField dg_pg = dgf(pg);
        if (order == 2) {
            TauField out = tau_antiderivative(dg_ag);
            axpy(out, Cplx(-1.0, 0.0), tau_antiderivative(tau_antiderivative(dg_pg)));
            return out;
        }

        auto a1 = [](const TauField& f) { return tau_antiderivative(f); };
        auto a2 = [&](const TauField& f) { return a1(a1(f)); };
        auto a3 = [&](const TauField& f) { return a1(a2(f)); };

        TauField out = a1(dgf(a1(dg_ag)));
        axpy(out, Cplx(-1.0, 0.0), a1(dgf(a2(dg_pg))));
        axpy(out, Cplx(0.5, 0.0), a1(d2g_field(xbar, ag, ag)));
        axpy(out, Cplx(-1.0, 0.0), a2(d2g_field(xbar, pg, ag)));
        axpy(out, Cplx(-1.0, 0.0), a2(dgf(a1(dg_pg))));
        axpy(out, Cplx(1.0, 0.0), a3(d2g_field(xbar, pg, pg)));
        axpy(out, Cplx(1.0, 0.0), a3(dgf(tau_project(dg_pg))));
        axpy(out, Cplx(-1.0, 0.0), a2(dgf(tau_project(dg_ag))));
        return out;
    }

    /// Prepared initial datum Z0(tau) = Xbar + sum_{j<=trunc} eps^j kappa_j in
    /// the [U;V] layout, with the kappa_j of the full slow vector field.
    TauField prepared_initial_data(int trunc) const {
        if (trunc < 0 || trunc > 3)
            throw std::invalid_argument("prepared_initial_data: trunc must be in 0..3");
        const FilteredState x0 = initial_qp();
        TauField z = constant_field(x0);
        double epsj = 1.0;
        for (int j = 1; j <= trunc; ++j) {
            epsj *= spec_.eps;
            axpy(z, Cplx(epsj, 0.0), kappa_full(j, x0));
        }
        return z;
    }

    /// TauField with only the k = 0 row, holding [U;V].
    TauField constant_field(const FilteredState& x) const {
        TauField z(n_tau_, slots());
        Cplx* row = z.row(n_tau_ / 2);
        for (std::size_t m = 0; m < grid_.n; ++m) {
            row[m] = x.u[m];
            row[grid_.n + m] = x.v[m];
        }
        return z;
    }

    /// Basis change [U;V] -> [w+;w-] with w± = U ± iV, row-wise.
    TauField uv_to_pm(const TauField& z) const {
        TauField out(z.n_tau(), z.slots());
        const std::size_t n = grid_.n;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            const Cplx* src = z.row(r);
            Cplx* dst = out.row(r);
            for (std::size_t m = 0; m < n; ++m) {
                const Cplx iv = Cplx(0, 1) * src[n + m];
                dst[m] = src[m] + iv;
                dst[n + m] = src[m] - iv;
            }
        }
        return out;
    }

    TauField pm_to_uv(const TauField& z) const {
        TauField out(z.n_tau(), z.slots());
        const std::size_t n = grid_.n;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            const Cplx* src = z.row(r);
            Cplx* dst = out.row(r);
            for (std::size_t m = 0; m < n; ++m) {
                dst[m] = 0.5 * (src[m] + src[n + m]);
                dst[n + m] = Cplx(0, -0.5) * (src[m] - src[n + m]);
            }
        }
        return out;
    }

    /// Dispersive rotation between the co-rotating frame W and the filtered
    /// variables Z at time t: Z± = e^{∓i D_m t} W± (w± layout, in place).
    /// rotate_pm(z, t) maps W -> Z; rotate_pm(z, -t) inverts.
    void rotate_pm(TauField& z, double t) const {
        const std::size_t n = grid_.n;
        std::vector<Cplx> ph(n);
        for (std::size_t m = 0; m < n; ++m) {
            const double th = phase_mod_two_pi(t, disp_[m]);
            ph[m] = Cplx(std::cos(th), -std::sin(th));  // e^{-i D_m t}
        }
        for (std::size_t r = 0; r < z.rows(); ++r) {
            Cplx* row = z.row(r);
            for (std::size_t m = 0; m < n; ++m) {
                row[m] *= ph[m];
                row[n + m] *= std::conj(ph[m]);
            }
        }
    }

    /// G_tau(Xbar) as a TauField (collocation-sampled, eps included).
    TauField g_field(const FilteredState& xbar) const {
        return scaled(gamma_eval(constant_field(xbar)), Cplx(spec_.eps, 0.0));
    }

    /// dG_tau(Xbar)[W] as a TauField for a tau-dependent direction W.
    TauField dg_field(const FilteredState& xbar, const TauField& w) const {
        std::vector<Cplx> base = base_values(xbar);
        std::vector<Cplx> panel = tau_to_collocation(w, plan_tau_);
        apply_pointwise_derivative(base, panel, nullptr);
        return collocation_to_tau(panel, n_tau_, slots(), plan_tau_);
    }

    /// d2G_tau(Xbar)[W1, W2] as a TauField.
    TauField d2g_field(const FilteredState& xbar, const TauField& w1, const TauField& w2) const {
        std::vector<Cplx> base = base_values(xbar);
        std::vector<Cplx> p1 = tau_to_collocation(w1, plan_tau_);
        std::vector<Cplx> p2 = tau_to_collocation(w2, plan_tau_);
        apply_pointwise_derivative(base, p1, &p2);
        return collocation_to_tau(p1, n_tau_, slots(), plan_tau_);
    }

private:
    void require_shape(const TauField& z) const {
        if (z.n_tau() != n_tau_ || z.slots() != slots())
            throw std::invalid_argument("TwoScaleContext: TauField shape mismatch");
    }

    // acc += D J w, the dispersive term in [U;V] layout: (u,v) -> (D v, -D u)
    void axpy_dispersive(TauField& acc, const TauField& w) const {
        const std::size_t n = grid_.n;
        for (std::size_t r = 0; r < acc.rows(); ++r) {
            Cplx* dst = acc.row(r);
            const Cplx* src = w.row(r);
            for (std::size_t m = 0; m < n; ++m) {
                dst[m] += disp_[m] * src[n + m];
                dst[n + m] -= disp_[m] * src[m];
            }
        }
    }

    // acc += D J Xbar as a constant-in-tau field
    void add_dispersive(TauField& acc, const FilteredState& xbar) const {
        const std::size_t n = grid_.n;
        Cplx* row = acc.row(n_tau_ / 2);
        for (std::size_t m = 0; m < n; ++m) {
            row[m] += disp_[m] * xbar.v[m];
            row[n + m] -= disp_[m] * xbar.u[m];
        }
    }

    // Phi^{-1}[cos U + sin V] transformed to physical values.
    std::vector<Cplx> inner_values(const FilteredState& x, double ct, double st) const {
        std::vector<Cplx> g(grid_.n);
        for (std::size_t m = 0; m < grid_.n; ++m)
            g[m] = inv_phi_[m] * (ct * x.u[m] + st * x.v[m]);
        plan_x_.inverse(g.data());
        return g;
    }

    FilteredState assemble(std::vector<Cplx>& what, double ct, double st) const {
        const double inv_n = 1.0 / static_cast<double>(grid_.n);
        FilteredState out(grid_.n);
        for (std::size_t m = 0; m < grid_.n; ++m) {
            const Cplx wm = inv_n * what[m];
            out.u[m] = -spec_.eps * st * wm;
            out.v[m] = spec_.eps * ct * wm;
        }
        return out;
    }

    // w <- scale * f(w), with the divergence guard. The built-in nonlinearities
    // are inlined; custom ones go through std::function.
    void apply_f_scaled(Cplx* g, std::size_t n, double scale) const {
        double peak = 0.0;
        switch (spec_.nonlin.kind) {
            case NonlinKind::cubic_modulus:
                for (std::size_t j = 0; j < n; ++j) {
                    const double a = std::norm(g[j]);
                    peak = std::max(peak, a);
                    g[j] *= scale * a;
                }
                peak = std::sqrt(peak);
                break;
            case NonlinKind::cubic_real:
                for (std::size_t j = 0; j < n; ++j) {
                    peak = std::max(peak, std::abs(g[j]));
                    g[j] = scale * g[j] * g[j] * g[j];
                }
                break;
            default:
                for (std::size_t j = 0; j < n; ++j) {
                    peak = std::max(peak, std::abs(g[j]));
                    g[j] = scale * spec_.nonlin.f(g[j]);
                }
        }
        if (!(peak <= spec_.guard))
            throw DivergenceError("two-scale nonlinearity: field magnitude " +
                                  std::to_string(peak) + " exceeds divergence guard");
    }

    void gamma_impl(const TauField& z, TauField& out, GammaScratch& s, bool pm) const {
        require_shape(z);
        if (out.n_tau() != n_tau_ || out.slots() != slots()) out = TauField(n_tau_, slots());
        const std::size_t n = grid_.n;
        const std::size_t w = slots();
        s.work.resize(n_tau_ * w);
        s.gbuf.resize(n);
        fold(z, s.work.data());
        plan_tau_.inverse_rows(s.work.data(), w);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n_tau_; ++j) {
            Cplx* row = s.work.data() + j * w;
            const double ct = cos_tau_[j], st = sin_tau_[j];
            Cplx* g = s.gbuf.data();
            if (pm) {
                const Cplx em(ct, -st);  // e^{-i tau_j}
                const Cplx ep(ct, st);
                for (std::size_t m = 0; m < n; ++m)
                    g[m] = 0.5 * inv_phi_[m] * (em * row[m] + ep * row[n + m]);
            } else {
                for (std::size_t m = 0; m < n; ++m)
                    g[m] = inv_phi_[m] * (ct * row[m] + st * row[n + m]);
            }
            plan_x_.inverse(g);
            apply_f_scaled(g, n, -spec_.lambda);
            plan_x_.forward(g);
            if (pm) {
                const Cplx fp = inv_n * Cplx(-st, ct);   // +i e^{+i tau_j} / n
                const Cplx fm = inv_n * Cplx(-st, -ct);  // -i e^{-i tau_j} / n
                for (std::size_t m = 0; m < n; ++m) {
                    const Cplx wm = g[m];
                    row[m] = fp * wm;
                    row[n + m] = fm * wm;
                }
            } else {
                for (std::size_t m = 0; m < n; ++m) {
                    const Cplx wm = inv_n * g[m];
                    row[m] = -st * wm;
                    row[n + m] = ct * wm;
                }
            }
        }
        plan_tau_.forward_rows(s.work.data(), w);
        unfold(s.work.data(), out);
    }

    // Physical-space base values Phi^{-1}[cos Xbar_U + sin Xbar_V] at every
    // collocation tau_j, n_tau x n_x.
    std::vector<Cplx> base_values(const FilteredState& xbar) const {
        const std::size_t n = grid_.n;
        std::vector<Cplx> base(n_tau_ * n);
        for (std::size_t j = 0; j < n_tau_; ++j) {
            Cplx* g = base.data() + j * n;
            for (std::size_t m = 0; m < n; ++m)
                g[m] = inv_phi_[m] * (cos_tau_[j] * xbar.u[m] + sin_tau_[j] * xbar.v[m]);
            plan_x_.inverse(g);
        }
        return base;
    }

    // In place on `panel` (n_tau x 2 n_x collocation data of the direction):
    // replaces it by dG_tau(Xbar)[W] (or d2G with a second direction), eps
    // factors included.
    void apply_pointwise_derivative(const std::vector<Cplx>& base, std::vector<Cplx>& panel,
                                    std::vector<Cplx>* panel2) const {
        const std::size_t n = grid_.n;
        const std::size_t w = slots();
        std::vector<Cplx> d1(n), d2(n);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n_tau_; ++j) {
            Cplx* row = panel.data() + j * w;
            const double ct = cos_tau_[j], st = sin_tau_[j];
            const Cplx* g = base.data() + j * n;
            for (std::size_t m = 0; m < n; ++m)
                d1[m] = inv_phi_[m] * (ct * row[m] + st * row[n + m]);
            plan_x_.inverse(d1.data());
            if (panel2) {
                const Cplx* row2 = panel2->data() + j * w;
                for (std::size_t m = 0; m < n; ++m)
                    d2[m] = inv_phi_[m] * (ct * row2[m] + st * row2[n + m]);
                plan_x_.inverse(d2.data());
                for (std::size_t p = 0; p < n; ++p)
                    d1[p] = -spec_.lambda * spec_.nonlin.d2f(g[p], d1[p], d2[p]);
            } else {
                for (std::size_t p = 0; p < n; ++p)
                    d1[p] = -spec_.lambda * spec_.nonlin.df(g[p], d1[p]);
            }
            plan_x_.forward(d1.data());
            for (std::size_t m = 0; m < n; ++m) {
                const Cplx wm = spec_.eps * inv_n * d1[m];
                row[m] = -st * wm;
                row[n + m] = ct * wm;
            }
        }
    }

    // (n_tau+1)-row coefficient storage <-> n_tau DFT bins, endpoint rows
    // summed (fold) or split in half (unfold).
    void fold(const TauField& z, Cplx* bins) const {
        const std::size_t w = slots();
        const std::size_t half = n_tau_ / 2;
        for (std::size_t b = 0; b < n_tau_; ++b) {
            const Cplx* src = z.row(b < half ? b + half : b - half);
            Cplx* dst = bins + b * w;
            if (b == half) {
                const Cplx* hi = z.row(n_tau_);
                for (std::size_t s = 0; s < w; ++s) dst[s] = src[s] + hi[s];
            } else {
                for (std::size_t s = 0; s < w; ++s) dst[s] = src[s];
            }
        }
    }

    void unfold(const Cplx* bins, TauField& out) const {
        const std::size_t w = slots();
        const std::size_t half = n_tau_ / 2;
        const double scale = 1.0 / static_cast<double>(n_tau_);
        for (std::size_t b = 0; b < n_tau_; ++b) {
            const Cplx* src = bins + b * w;
            if (b == half) {
                Cplx* lo = out.row(0);
                Cplx* hi = out.row(n_tau_);
                for (std::size_t s = 0; s < w; ++s) {
                    const Cplx c = 0.5 * scale * src[s];
                    lo[s] = c;
                    hi[s] = c;
                }
            } else {
                Cplx* dst = out.row(b < half ? b + half : b - half);
                for (std::size_t s = 0; s < w; ++s) dst[s] = scale * src[s];
            }
        }
    }

    ProblemSpec spec_;
    SpatialGrid grid_;
    PhaseOperator phase_;
    std::size_t n_tau_;
    FftPlan plan_x_;
    FftPlan plan_tau_;
    std::vector<double> cos_tau_, sin_tau_;
    std::vector<double> inv_phi_;
    std::vector<double> disp_;
};

}  // namespace kgts

#endif
