#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kgts/twoscale.hpp"

using namespace kgts;

namespace {
FilteredState random_state(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    FilteredState x(n);
    for (std::size_t m = 0; m < n; ++m) {
        x.u[m] = Cplx(u(rng), u(rng));
        x.v[m] = Cplx(u(rng), u(rng));
    }
    return x;
}

double state_sup(const FilteredState& x) {
    return std::max(sup_norm(x.u), sup_norm(x.v));
}

FilteredState state_diff(const FilteredState& a, const FilteredState& b) {
    FilteredState d(a.u.size());
    for (std::size_t m = 0; m < a.u.size(); ++m) {
        d.u[m] = a.u[m] - b.u[m];
        d.v[m] = a.v[m] - b.v[m];
    }
    return d;
}
}  // namespace

TEST_CASE("nonlinearity gradient consistency f = grad H1") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const double d = 1e-6;

    const Nonlinearity cm = cubic_modulus_nonlinearity();
    CHECK(std::abs(cm.f(Cplx(0, 0))) == 0.0);
    CHECK(std::abs(cm.df(Cplx(0, 0), Cplx(1, 1))) == 0.0);
    for (int t = 0; t < 20; ++t) {
        const Cplx z(u(rng), u(rng));
        // Wirtinger gradient: f = (1/2)(dH1/dRe + i dH1/dIm)
        const double gr = (cm.h1(z + d) - cm.h1(z - d)) / (2 * d);
        const double gi = (cm.h1(z + Cplx(0, d)) - cm.h1(z - Cplx(0, d))) / (2 * d);
        CHECK(std::abs(0.5 * Cplx(gr, gi) - cm.f(z)) <= 1e-6 * std::max(1.0, std::abs(cm.f(z))));
    }

    const Nonlinearity cr = cubic_real_nonlinearity();
    for (int t = 0; t < 20; ++t) {
        const Cplx z(u(rng), 0.0);  // real convention
        const double g = (cr.h1(z + d) - cr.h1(z - d)) / (2 * d);
        CHECK(std::abs(Cplx(g, 0) - cr.f(z)) <= 1e-6 * std::max(1.0, std::abs(cr.f(z))));
    }
}

TEST_CASE("initial data") {
    ProblemSpec zero = default_problem(0.5);
    zero.psi1 = [](double) { return Cplx(0, 0); };
    zero.psi2 = [](double) { return Cplx(0, 0); };
    TwoScaleContext zctx(zero, 8, 8);
    CHECK(state_sup(zctx.initial_qp()) == 0.0);

    ProblemSpec mode = default_problem(0.5);
    mode.freq_exponent = 2;
    mode.psi1 = [](double x) { return std::polar(1.0, x); };
    mode.psi2 = [](double x) { return std::polar(0.7, 2 * x); };
    TwoScaleContext ctx(mode, 8, 8);
    const FilteredState q = ctx.initial_qp();
    CHECK(std::abs(q.u[1] - std::sqrt(1.25)) <= 1e-13);  // Phi weight at k=1
    for (std::size_t m = 0; m < 8; ++m)
        if (m != 1) CHECK(std::abs(q.u[m]) <= 1e-13);

    // p0 is independent of eps
    ProblemSpec mode2 = mode;
    mode2.eps = 0.125;
    TwoScaleContext ctx2(mode2, 8, 8);
    const FilteredState q2 = ctx2.initial_qp();
    for (std::size_t m = 0; m < 8; ++m) CHECK(std::abs(q2.v[m] - q.v[m]) <= 1e-14);
}

TEST_CASE("g_tau basics") {
    std::mt19937_64 rng(41);

    ProblemSpec off = default_problem(0.25);
    off.lambda = 0.0;
    TwoScaleContext octx(off, 8, 8);
    FilteredState x = random_state(rng, 8);
    CHECK(state_sup(octx.g_tau(x, 1.234)) == 0.0);

    TwoScaleContext ctx(default_problem(0.25), 8, 8);
    // tau = 0: sin block vanishes, cos block is eps * transform(-lambda f(Phi^-1 U))
    const FilteredState g0 = ctx.g_tau(x, 0.0);
    CHECK(sup_norm(g0.u) == 0.0);
    std::vector<Cplx> inner(8);
    for (std::size_t m = 0; m < 8; ++m) inner[m] = x.u[m] / ctx.phase().freqs[m];
    ctx.plan_x().inverse(inner.data());
    for (Cplx& z : inner) z = -ctx.spec().lambda * ctx.spec().nonlin.f(z);
    ctx.plan_x().forward(inner.data());
    for (std::size_t m = 0; m < 8; ++m)
        CHECK(std::abs(g0.v[m] - ctx.spec().eps * inner[m] / 8.0) <= 1e-13);

    // sin^2 + cos^2 = 1 mode-wise, so the Parseval norm of G equals
    // eps |lambda| times the grid L2 norm of f(g)
    for (int t = 0; t < 5; ++t) {
        const double tau = 2.7 * t + 0.3;
        const FilteredState g = ctx.g_tau(x, tau);
        double lhs = 0;
        for (std::size_t m = 0; m < 8; ++m) lhs += std::norm(g.u[m]) + std::norm(g.v[m]);

        std::vector<Cplx> inner2(8);
        for (std::size_t m = 0; m < 8; ++m)
            inner2[m] = (std::cos(tau) * x.u[m] + std::sin(tau) * x.v[m]) / ctx.phase().freqs[m];
        ctx.plan_x().inverse(inner2.data());
        double rhs = 0;
        for (const Cplx& z : inner2) rhs += std::norm(ctx.spec().nonlin.f(z));
        rhs *= ctx.spec().eps * ctx.spec().eps * ctx.spec().lambda * ctx.spec().lambda / 8.0;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("directional derivatives match finite differences") {
    std::mt19937_64 rng(43);
    TwoScaleContext ctx(default_problem(0.25), 8, 8);
    const double d = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const FilteredState x = random_state(rng, 8);
        const FilteredState w = random_state(rng, 8);
        const double tau = 5.0 * t / 20.0;

        FilteredState xp = x, xm = x;
        for (std::size_t m = 0; m < 8; ++m) {
            xp.u[m] += d * w.u[m];
            xp.v[m] += d * w.v[m];
            xm.u[m] -= d * w.u[m];
            xm.v[m] -= d * w.v[m];
        }
        const FilteredState gp = ctx.g_tau(xp, tau);
        const FilteredState gm = ctx.g_tau(xm, tau);
        const FilteredState jac = ctx.g_tau_jacvec(x, tau, w);
        double scale = std::max(1e-12, state_sup(jac));
        for (std::size_t m = 0; m < 8; ++m) {
            CHECK(std::abs((gp.u[m] - gm.u[m]) / (2 * d) - jac.u[m]) <= 1e-6 * scale);
            CHECK(std::abs((gp.v[m] - gm.v[m]) / (2 * d) - jac.v[m]) <= 1e-6 * scale);
        }

        // second derivative via centered difference of the jacvec
        const FilteredState w2 = random_state(rng, 8);
        FilteredState yp = x, ym = x;
        for (std::size_t m = 0; m < 8; ++m) {
            yp.u[m] += d * w2.u[m];
            yp.v[m] += d * w2.v[m];
            ym.u[m] -= d * w2.u[m];
            ym.v[m] -= d * w2.v[m];
        }
        const FilteredState jp = ctx.g_tau_jacvec(yp, tau, w);
        const FilteredState jm = ctx.g_tau_jacvec(ym, tau, w);
        const FilteredState bil = ctx.g_tau_bilinear(x, tau, w, w2);
        scale = std::max(1e-12, state_sup(bil));
        for (std::size_t m = 0; m < 8; ++m) {
            CHECK(std::abs((jp.u[m] - jm.u[m]) / (2 * d) - bil.u[m]) <= 1e-6 * scale);
            CHECK(std::abs((jp.v[m] - jm.v[m]) / (2 * d) - bil.v[m]) <= 1e-6 * scale);
        }
    }

    // zero direction gives zero
    const FilteredState x = random_state(rng, 8);
    CHECK(state_sup(ctx.g_tau_jacvec(x, 0.7, FilteredState(8))) == 0.0);
}

TEST_CASE("kappa corrections") {
    ProblemSpec off = default_problem(0.25);
    off.lambda = 0.0;
    TwoScaleContext octx(off, 8, 16);
    const FilteredState x0_off = octx.initial_qp();
    for (int j = 1; j <= 3; ++j) CHECK(sup_norm(octx.kappa(j, x0_off)) == 0.0);

    TwoScaleContext ctx(default_problem(0.25), 16, 32);
    const FilteredState x0 = ctx.initial_qp();
    for (int j = 1; j <= 3; ++j) {
        const TauField k = ctx.kappa(j, x0);
        CHECK(sup_norm(tau_project(k)) <= 1e-13);  // every term starts with A
        CHECK(sup_norm(k) > 0.0);
    }
    CHECK_THROWS_AS(ctx.kappa(4, x0), std::invalid_argument);
    CHECK_THROWS_AS(ctx.kappa(0, x0), std::invalid_argument);

    // halving eps scales |kappa_j| by about 2^-j (within a factor of 2)
    for (int j = 1; j <= 3; ++j) {
        double prev = -1.0;
        for (double eps : {0.25, 0.125, 0.0625}) {
            TwoScaleContext c(default_problem(eps), 16, 32);
            const double nk = sup_norm(c.kappa(j, c.initial_qp()));
            if (prev > 0.0) {
                const double ratio = prev / nk;
                const double target = std::pow(2.0, j);
                CHECK(ratio >= target / 2.0);
                CHECK(ratio <= target * 2.0);
            }
            prev = nk;
        }
    }
}

TEST_CASE("prepared initial data") {
    TwoScaleContext ctx(default_problem(0.25), 16, 32);
    const FilteredState x0 = ctx.initial_qp();

    const TauField z0 = ctx.prepared_initial_data(0);
    for (std::size_t r = 0; r < z0.rows(); ++r) {
        if (ctx.n_tau() / 2 == r) continue;
        CHECK(sup_norm(std::vector<Cplx>(z0.row(r), z0.row(r) + z0.slots())) == 0.0);
    }

    ProblemSpec off = default_problem(0.25);
    off.lambda = 0.0;
    TwoScaleContext octx(off, 16, 32);
    TauField a = octx.prepared_initial_data(0), b = octx.prepared_initial_data(3);
    axpy(a, Cplx(-1, 0), b);
    CHECK(sup_norm(a) == 0.0);

    // Pi of the prepared datum is exactly [q0; p0]
    const TauField z3 = ctx.prepared_initial_data(3);
    const TauField pz = tau_project(z3);
    const Cplx* row = pz.row(ctx.n_tau() / 2);
    for (std::size_t m = 0; m < ctx.n_x(); ++m) {
        CHECK(std::abs(row[m] - x0.u[m]) <= 1e-15);
        CHECK(std::abs(row[ctx.n_x() + m] - x0.v[m]) <= 1e-15);
    }
}

TEST_CASE("gamma evaluation") {
    std::mt19937_64 rng(53);

    ProblemSpec off = default_problem(0.25);
    off.lambda = 0.0;
    TwoScaleContext octx(off, 8, 16);
    TauField z(16, 16);
    for (Cplx& c : z.data()) c = Cplx(0.1, -0.2);
    CHECK(sup_norm(octx.gamma_eval(z)) == 0.0);

    // constant-in-tau field: eps * Gamma equals g_tau sampled at the
    // collocation points
    TwoScaleContext ctx(default_problem(0.25), 8, 16);
    const FilteredState x = random_state(rng, 8);
    const TauField zc = ctx.constant_field(x);
    const TauField gam = ctx.gamma_eval(zc);
    const auto vals = tau_to_collocation(gam, ctx.plan_tau());
    for (std::size_t j = 0; j < 16; ++j) {
        const double tau = kTwoPi * j / 16.0;
        const FilteredState ref = ctx.g_tau(x, tau);  // includes the eps factor
        for (std::size_t m = 0; m < 8; ++m) {
            CHECK(std::abs(ctx.spec().eps * vals[j * 16 + m] - ref.u[m]) <= 1e-12);
            CHECK(std::abs(ctx.spec().eps * vals[j * 16 + 8 + m] - ref.v[m]) <= 1e-12);
        }
    }

    // the discrete nonlinearity lives on the tau-torus: its output is
    // 2pi-periodic-consistent under evaluation
    for (std::size_t j = 0; j < 4; ++j) {
        const double tau = kTwoPi * j / 16.0;
        const auto a = tau_eval(gam, tau);
        const auto b = tau_eval(gam, tau + kTwoPi);
        for (std::size_t s = 0; s < 16; ++s) CHECK(std::abs(a[s] - b[s]) <= 1e-13);
    }

    // translation equivariance of the pseudo-spectral pipeline for |u|^2 u
    const double x0 = kTwoPi / 8.0;  // one grid spacing
    TauField zs(16, 16);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        // random smooth-ish field
        for (std::size_t s = 0; s < 16; ++s)
            zs(r, s) = Cplx(std::sin(0.3 * r + 0.7 * s), std::cos(0.2 * r - 0.4 * s)) /
                       (1.0 + std::abs(static_cast<double>(r) - 8.0));
    }
    auto shift = [&](const TauField& f) {
        TauField out = f;
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t m = 0; m < 8; ++m) {
                const int k = ctx.grid().wavenumbers[m];
                const Cplx ph = std::polar(1.0, -k * x0);
                out(r, m) = ph * f(r, m);
                out(r, 8 + m) = ph * f(r, 8 + m);
            }
        return out;
    };
    const TauField lhs = ctx.gamma_eval(shift(zs));
    const TauField rhs = shift(ctx.gamma_eval(zs));
    double d = 0;
    for (std::size_t i = 0; i < lhs.data().size(); ++i)
        d = std::max(d, std::abs(lhs.data()[i] - rhs.data()[i]));
    CHECK(d <= 1e-12);

    // divergence guard trips on huge fields
    TauField huge(16, 16);
    huge(8, 0) = Cplx(1e9, 0);
    CHECK_THROWS_AS(ctx.gamma_eval(huge), DivergenceError);
}

TEST_CASE("gamma in the w± basis is the conjugated [U;V] gamma") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    TwoScaleContext ctx(default_problem(0.25), 8, 16);
    TauField z(16, 16);
    for (Cplx& c : z.data()) c = Cplx(u(rng), u(rng));

    GammaScratch s;
    TauField direct(16, 16);
    ctx.gamma_pm_into(z, direct, s);
    const TauField conjugated = ctx.uv_to_pm(ctx.gamma_eval(ctx.pm_to_uv(z)));
    double d = 0;
    for (std::size_t i = 0; i < direct.data().size(); ++i)
        d = std::max(d, std::abs(direct.data()[i] - conjugated.data()[i]));
    CHECK(d <= 1e-13);

    // the basis change round-trips exactly
    const TauField rt = ctx.uv_to_pm(ctx.pm_to_uv(z));
    d = 0;
    for (std::size_t i = 0; i < rt.data().size(); ++i)
        d = std::max(d, std::abs(rt.data()[i] - z.data()[i]));
    CHECK(d <= 1e-15);
}
