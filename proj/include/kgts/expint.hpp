#ifndef KGTS_EXPINT_HPP
#define KGTS_EXPINT_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/tau.hpp"

namespace kgts {

namespace detail {
inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

inline Cplx unit_exp(Cplx z) {
    // e^z; pure imaginary arguments go through the reduced-phase path so the
    // result has modulus exactly representable near 1.
    if (z.real() == 0.0) {
        const double th = phase_mod_two_pi(z.imag());
        return Cplx(std::cos(th), std::sin(th));
    }
    return std::exp(z);
}
}  // namespace detail

/// phi_rho(z) = int_0^1 theta^{rho-1} e^{(1-theta) z} / (rho-1)! dtheta, with
/// phi_0 = e^z. Taylor series for |z| <= 2, upward recurrence
/// phi_rho = (phi_{rho-1} - 1/(rho-1)!)/z above. The recurrence loses about
/// (rho/|z|)^rho ulps near the origin, so the Taylor branch carries the small
/// arguments; both branches agree with the quadrature oracle to ~1e-13.
inline Cplx phi(int rho, Cplx z) {
    if (rho < 0) throw std::invalid_argument("phi: rho must be >= 0");
    if (rho == 0) return detail::unit_exp(z);
    if (std::abs(z) <= 2.0) {
        Cplx term = Cplx(1.0 / detail::factorial(rho), 0.0);
        Cplx sum = term;
        for (int j = 1; j <= 72; ++j) {
            term *= z / static_cast<double>(j + rho);
            sum += term;
            if (std::abs(term) < 1e-20 * std::abs(sum)) break;
        }
        return sum;
    }
    Cplx p = detail::unit_exp(z);
    for (int r = 1; r <= rho; ++r) p = (p - 1.0 / detail::factorial(r - 1)) / z;
    return p;
}

/// s-stage exponential integrator tableau: nodes c_i and operator-valued
/// coefficient functions a(i, rho, z), b(rho, z) evaluated entrywise on the
/// diagonal of hM. Stage indices are 0-based. `explicit_stage[i]` marks rows
/// with identically zero a-coefficients.
struct Tableau {
    std::string name;
    std::size_t stages = 0;
    std::vector<double> nodes;
    std::function<Cplx(std::size_t, std::size_t, Cplx)> a;
    std::function<Cplx(std::size_t, Cplx)> b;
    std::vector<bool> explicit_stage;
};

namespace detail {
inline std::vector<bool> detect_explicit_rows(const Tableau& t) {
    const Cplx probes[] = {Cplx(0, 0), Cplx(0, 0.7), Cplx(0, -2.3), Cplx(0, 17.0)};
    std::vector<bool> mask(t.stages, true);
    for (std::size_t i = 0; i < t.stages; ++i)
        for (std::size_t r = 0; r < t.stages && mask[i]; ++r)
            for (const Cplx& z : probes)
                if (std::abs(t.a(i, r, z)) > 1e-13) {
                    mask[i] = false;
                    break;
                }
    return mask;
}
}  // namespace detail

/// Symmetric two-stage integrator of order two. The general family has free
/// c1 (c2 = 1 - c1, c1 != 1/2); c1 = 0 is the S2O2 method, for which the
/// coefficients collapse to b1 = a21 = phi1 - phi2, b2 = a22 = phi2 and a
/// zero first row.
inline Tableau tableau_s2o2(double c1 = 0.0) {
    const double c2 = 1.0 - c1;
    if (c1 == c2) throw std::invalid_argument("tableau_s2o2: c1 = 1/2 is degenerate");
    Tableau t;
    t.name = c1 == 0.0 ? "s2o2" : "s2o2(c1=" + std::to_string(c1) + ")";
    t.stages = 2;
    t.nodes = {c1, c2};
    auto b1 = [=](Cplx z) { return (-c2 * phi(1, z) + phi(2, z)) / (c1 - c2); };
    auto b2 = [=](Cplx z) { return (c1 * phi(1, z) - phi(2, z)) / (c1 - c2); };
    auto a21 = [=](Cplx z) { return c2 * c2 * (-phi(1, c2 * z) + phi(2, c2 * z)) / (c1 - c2); };
    auto a12 = [=](Cplx z) { return -a21(-z) + detail::unit_exp(c1 * z) * b1(-z); };
    t.b = [=](std::size_t rho, Cplx z) { return rho == 0 ? b1(z) : b2(z); };
    t.a = [=](std::size_t i, std::size_t rho, Cplx z) -> Cplx {
        if (i == 0) return rho == 0 ? -a12(z) + c1 * phi(1, c1 * z) : a12(z);
        return rho == 0 ? a21(z) : -a21(z) + c2 * phi(1, c2 * z);
    };
    t.explicit_stage = detail::detect_explicit_rows(t);
    return t;
}

/// Symmetric three-stage integrator of order four (S3O4), nodes (1, 1/2, 0).
/// Stage 3 is explicit and the first row repeats the b-weights, so the new
/// step value equals stage 1.
inline Tableau tableau_s3o4() {
    Tableau t;
    t.name = "s3o4";
    t.stages = 3;
    t.nodes = {1.0, 0.5, 0.0};
    auto bw = [](std::size_t rho, Cplx z) -> Cplx {
        switch (rho) {
            case 0: return 4.0 * phi(3, z) - phi(2, z);
            case 1: return 4.0 * phi(2, z) - 8.0 * phi(3, z);
            default: return phi(1, z) - 3.0 * phi(2, z) + 4.0 * phi(3, z);
        }
    };
    t.b = bw;
    t.a = [bw](std::size_t i, std::size_t rho, Cplx z) -> Cplx {
        if (i == 0) return bw(rho, z);
        if (i == 2) return Cplx(0, 0);
        const Cplx h = 0.5 * z;
        switch (rho) {
            case 0: return -0.25 * phi(2, h) + 0.5 * phi(3, h);
            case 1: return phi(2, h) - phi(3, h);
            default: return 0.5 * phi(1, h) - 0.75 * phi(2, h) + 0.5 * phi(3, h);
        }
    };
    t.explicit_stage = detail::detect_explicit_rows(t);
    return t;
}

/// The non-symmetric one-stage baseline (NSM): c1 = 1/2, a11 = 1/2, b1 = phi1.
inline Tableau tableau_nsm() {
    Tableau t;
    t.name = "nsm";
    t.stages = 1;
    t.nodes = {0.5};
    t.a = [](std::size_t, std::size_t, Cplx) { return Cplx(0.5, 0.0); };
    t.b = [](std::size_t, Cplx z) { return phi(1, z); };
    t.explicit_stage = {false};
    return t;
}

struct SymmetryResiduals {
    double nodes = 0.0;    // sup |c_i - (1 - c_{s+1-i})|
    double weights = 0.0;  // sup |b_rho(z) - e^z b_{s+1-rho}(-z)|
    double stages = 0.0;   // sup |a_irho(z) - e^{c_i z} b_{s+1-rho}(-z) + a_{s+1-i,s+1-rho}(-z)|
    double max() const { return std::max(nodes, std::max(weights, stages)); }
};

inline SymmetryResiduals check_symmetry(const Tableau& t, std::span<const Cplx> z_samples) {
    SymmetryResiduals r;
    const std::size_t s = t.stages;
    for (std::size_t i = 0; i < s; ++i)
        r.nodes = std::max(r.nodes, std::abs(t.nodes[i] - (1.0 - t.nodes[s - 1 - i])));
    for (const Cplx& z : z_samples) {
        const Cplx ez = detail::unit_exp(z);
        for (std::size_t rho = 0; rho < s; ++rho)
            r.weights = std::max(r.weights, std::abs(t.b(rho, z) - ez * t.b(s - 1 - rho, -z)));
        for (std::size_t i = 0; i < s; ++i) {
            const Cplx eci = detail::unit_exp(t.nodes[i] * z);
            for (std::size_t rho = 0; rho < s; ++rho) {
                const Cplx lhs = t.a(i, rho, z);
                const Cplx rhs = eci * t.b(s - 1 - rho, -z) - t.a(s - 1 - i, s - 1 - rho, -z);
                r.stages = std::max(r.stages, std::abs(lhs - rhs));
            }
        }
    }
    return r;
}

/// Stiff order condition residuals
///   psi_rho(z)   = phi_rho(z) - sum_i b_i(z) c_i^{rho-1}/(rho-1)!
///   psi_rho_i(z) = phi_rho(c_i z) c_i^rho - sum_k a_ik(z) c_k^{rho-1}/(rho-1)!
/// evaluated over the sample set for rho = 1..r. psi_r(0) is reported
/// separately: for the top order the condition is only required at z = 0.
struct OrderResiduals {
    std::vector<double> psi;                     // psi[rho-1] = sup_z |psi_rho|
    std::vector<std::vector<double>> psi_stage;  // psi_stage[rho-1][i]
    double psi_r_at_zero = 0.0;

    double max_through(int r) const {
        // joint residual for order r: psi_1..psi_{r-1}, psi_{rho,i} for rho < r,
        // and psi_r at zero
        double m = psi_r_at_zero;
        for (int rho = 1; rho < r; ++rho) {
            m = std::max(m, psi[rho - 1]);
            for (double v : psi_stage[rho - 1]) m = std::max(m, v);
        }
        return m;
    }
};

inline OrderResiduals stiff_order_residuals(const Tableau& t, int r,
                                            std::span<const Cplx> z_samples) {
    if (r < 1 || r > 4) throw std::invalid_argument("stiff_order_residuals: r must be in 1..4");
    const std::size_t s = t.stages;
    OrderResiduals out;
    out.psi.assign(r, 0.0);
    out.psi_stage.assign(r, std::vector<double>(s, 0.0));
    auto eval = [&](int rho, Cplx z) {
        Cplx acc = phi(rho, z);
        for (std::size_t i = 0; i < s; ++i)
            acc -= t.b(i, z) * detail::ipow(t.nodes[i], rho - 1) / detail::factorial(rho - 1);
        out.psi[rho - 1] = std::max(out.psi[rho - 1], std::abs(acc));
        for (std::size_t i = 0; i < s; ++i) {
            Cplx aci = phi(rho, t.nodes[i] * z) * detail::ipow(t.nodes[i], rho);
            for (std::size_t k = 0; k < s; ++k)
                aci -= t.a(i, k, z) * detail::ipow(t.nodes[k], rho - 1) / detail::factorial(rho - 1);
            out.psi_stage[rho - 1][i] = std::max(out.psi_stage[rho - 1][i], std::abs(aci));
        }
    };
    for (const Cplx& z : z_samples)
        for (int rho = 1; rho <= r; ++rho) eval(rho, z);
    Cplx top = phi(r, Cplx(0, 0));
    for (std::size_t i = 0; i < s; ++i)
        top -= t.b(i, Cplx(0, 0)) * detail::ipow(t.nodes[i], r - 1) / detail::factorial(r - 1);
    out.psi_r_at_zero = std::abs(top);
    return out;
}

/// Log-spaced imaginary sample grid |Im z| in [lo, hi] plus z = 0, both signs.
inline std::vector<Cplx> imaginary_samples(std::size_t count, double lo = 1e-3, double hi = 1e3) {
    std::vector<Cplx> zs;
    zs.reserve(2 * count + 1);
    zs.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const double y =
            lo * std::pow(hi / lo, count == 1 ? 0.0 : static_cast<double>(i) / (count - 1));
        zs.emplace_back(0.0, y);
        zs.emplace_back(0.0, -y);
    }
    return zs;
}

struct StepOptions {
    double tol = 1e-12;
    int max_iter = 200;
};

struct StepStats {
    int iterations = 0;
    double residual = 0.0;
};

/// One-step map of the exponential Fourier spectral discretization:
///   Zhat^{ni}  = e^{c_i h M} Zhat^n + eps h sum_rho a_irho(hM) Gamma(Zhat^{nrho})
///   Zhat^{n+1} = e^{h M} Zhat^n     + eps h sum_rho b_rho(hM) Gamma(Zhat^{nrho})
/// with M diagonal entrywise over the field (one multiplier per tau-mode and
/// slot). Implicit stages are solved by one joint fixed-point iteration over
/// the whole stage vector, starting from the free flight e^{c_i h M} Zhat^n;
/// the nonlinearity carries an eps prefactor, so the iteration contracts for
/// eps*h small. Coefficient tables are built once per (tableau, h, M) and
/// reused across steps.
class ExpIntStepper {
public:
    ExpIntStepper(Tableau tab, double h, double eps, std::span<const Cplx> m_diag,
                  StepOptions opt = {})
        : tab_(std::move(tab)), h_(h), eps_(eps), opt_(opt), size_(m_diag.size()) {
        const std::size_t s = tab_.stages;
        e_.assign(s, std::vector<Cplx>(size_));
        efull_.resize(size_);
        a_.assign(s, std::vector<std::vector<Cplx>>(s, std::vector<Cplx>(size_)));
        b_.assign(s, std::vector<Cplx>(size_));
        for (std::size_t r = 0; r < size_; ++r) {
            const Cplx z = h_ * m_diag[r];
            efull_[r] = detail::unit_exp(z);
            for (std::size_t i = 0; i < s; ++i) {
                e_[i][r] = detail::unit_exp(tab_.nodes[i] * z);
                b_[i][r] = tab_.b(i, z);
                for (std::size_t k = 0; k < s; ++k) a_[i][k][r] = tab_.a(i, k, z);
            }
        }
    }

    double h() const { return h_; }
    const Tableau& tableau() const { return tab_; }

    /// gamma: void(const TauField& in, TauField& out, double c) where c is the
    /// stage node, so non-autonomous nonlinearities can be sampled at the
    /// stage time t_n + c h.
    template <class GammaFn>
    TauField step(const TauField& zn, GammaFn&& gamma, StepStats* stats = nullptr) {
        const std::size_t s = tab_.stages;
        const double eh = eps_ * h_;
        ensure_workspace(zn);
        // Initial guess: free flight. Explicit stages (identically zero
        // a-row) are already final, so their Gamma is fixed for the solve.
        for (std::size_t i = 0; i < s; ++i) {
            product(e_[i], zn, stages_[i]);
            if (tab_.explicit_stage[i]) gamma(stages_[i], gammas_[i], tab_.nodes[i]);
        }

        std::vector<std::size_t> implicit;
        for (std::size_t i = 0; i < s; ++i)
            if (!tab_.explicit_stage[i]) implicit.push_back(i);

        StepStats st;
        if (!implicit.empty()) {
            for (int it = 1; it <= opt_.max_iter; ++it) {
                for (std::size_t i : implicit) gamma(stages_[i], gammas_[i], tab_.nodes[i]);
                double res = 0.0;
                for (std::size_t i : implicit) {
                    product(e_[i], zn, next_);
                    for (std::size_t k = 0; k < s; ++k) axpy_table(next_, a_[i][k], gammas_[k], eh);
                    res = std::max(res, max_diff(next_, stages_[i]));
                    std::swap(next_.data(), stages_[i].data());
                }
                st.iterations = it;
                st.residual = res;
                if (res <= opt_.tol) break;
                if (it == opt_.max_iter)
                    throw ConvergenceError("fixed-point stage solve did not reach tol " +
                                               std::to_string(opt_.tol) + " (residual " +
                                               std::to_string(res) + ")",
                                           res, it);
            }
        }
        TauField out(zn.n_tau(), zn.slots());
        product(efull_, zn, out);
        for (std::size_t k = 0; k < s; ++k) axpy_table(out, b_[k], gammas_[k], eh);
        if (stats) *stats = st;
        return out;
    }

private:
    void ensure_workspace(const TauField& zn) {
        if (zn.data().size() != size_)
            throw std::invalid_argument("ExpIntStepper: field size does not match M diagonal");
        if (stages_.size() != tab_.stages || stages_[0].n_tau() != zn.n_tau() ||
            stages_[0].slots() != zn.slots()) {
            stages_.assign(tab_.stages, TauField(zn.n_tau(), zn.slots()));
            gammas_.assign(tab_.stages, TauField(zn.n_tau(), zn.slots()));
            next_ = TauField(zn.n_tau(), zn.slots());
        }
    }

    void product(const std::vector<Cplx>& table, const TauField& in, TauField& out) const {
        const Cplx* src = in.data().data();
        Cplx* dst = out.data().data();
        for (std::size_t i = 0; i < size_; ++i) dst[i] = table[i] * src[i];
    }

    void axpy_table(TauField& acc, const std::vector<Cplx>& table, const TauField& x,
                    double scale) const {
        const Cplx* src = x.data().data();
        Cplx* dst = acc.data().data();
        for (std::size_t i = 0; i < size_; ++i) dst[i] += scale * table[i] * src[i];
    }

    static double max_diff(const TauField& a, const TauField& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i)
            m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
        return m;
    }

    Tableau tab_;
    double h_;
    double eps_;
    StepOptions opt_;
    std::size_t size_;
    std::vector<std::vector<Cplx>> e_;
    std::vector<Cplx> efull_;
    std::vector<std::vector<std::vector<Cplx>>> a_;
    std::vector<std::vector<Cplx>> b_;
    std::vector<TauField> stages_;
    std::vector<TauField> gammas_;
    TauField next_;
};

}  // namespace kgts

#endif
