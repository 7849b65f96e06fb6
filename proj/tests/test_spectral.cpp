#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kgts/spectral.hpp"

using namespace kgts;

namespace {
std::vector<Cplx> random_field(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Cplx> f(n);
    for (Cplx& z : f) z = Cplx(u(rng), u(rng));
    return f;
}
}  // namespace

TEST_CASE("grid points and wavenumbers") {
    SpatialGrid g(8);
    CHECK(g.points[0] == doctest::Approx(-kPi));
    for (std::size_t j = 1; j < 8; ++j)
        CHECK(g.points[j] - g.points[j - 1] == doctest::Approx(kTwoPi / 8));
    CHECK(g.wavenumbers[0] == 0);
    CHECK(g.wavenumbers[3] == 3);
    CHECK(g.wavenumbers[4] == -4);
    CHECK(g.wavenumbers[7] == -1);
    CHECK_THROWS_AS(SpatialGrid(7), std::invalid_argument);
    CHECK_THROWS_AS(SpatialGrid(2), std::invalid_argument);
}

TEST_CASE("transform round trip and normalization") {
    SpatialGrid g(32);
    FftPlan plan(32);
    std::mt19937_64 rng(1);
    auto f = random_field(rng, 32);
    auto coeffs = to_coeffs(g, plan, f);
    auto back = to_values(g, plan, coeffs);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < 32; ++j) {
        num = std::max(num, std::abs(back[j] - f[j]));
        den = std::max(den, std::abs(f[j]));
    }
    CHECK(num / den <= 1e-13);

    // constant -> k=0 coefficient, e^{ix} -> k=1 bin
    std::vector<Cplx> c(32, Cplx(2.5, -1.0));
    auto cc = to_coeffs(g, plan, c);
    CHECK(std::abs(cc[0] - Cplx(2.5, -1.0)) <= 1e-14);
    std::vector<Cplx> e1(32);
    for (std::size_t j = 0; j < 32; ++j) e1[j] = std::polar(1.0, g.points[j]);
    auto ec = to_coeffs(g, plan, e1);
    CHECK(std::abs(ec[1] - 1.0) <= 1e-13);
    for (std::size_t m = 0; m < 32; ++m)
        if (m != 1) CHECK(std::abs(ec[m]) <= 1e-13);
}

TEST_CASE("fourier differentiation matrix entries") {
    auto a32 = fourier_diff_matrix(32);
    CHECK(a32[0] == doctest::Approx(32.0 * 32.0 / 12.0 + 1.0 / 6.0));
    CHECK(a32[0] == doctest::Approx(85.5).epsilon(1e-12));

    auto a4 = fourier_diff_matrix(4);
    CHECK(a4[0 * 4 + 1] == doctest::Approx(-1.0));  // sin^2(pi/4) = 1/2
    CHECK(a4[1 * 4 + 2] == doctest::Approx(-1.0));

    // symmetry
    for (std::size_t k = 0; k < 32; ++k)
        for (std::size_t j = 0; j < 32; ++j)
            CHECK(a32[k * 32 + j] == doctest::Approx(a32[j * 32 + k]).epsilon(1e-14));

    CHECK_THROWS_AS(fourier_diff_matrix(5), std::invalid_argument);
    CHECK_THROWS_AS(fourier_diff_matrix(2), std::invalid_argument);
}

TEST_CASE("diff matrix has the spectral Laplacian eigenpairs") {
    const std::size_t n = 32;
    SpatialGrid g(n);
    auto a = fourier_diff_matrix(n);
    for (int k : g.wavenumbers) {
        std::vector<Cplx> w(n), aw(n, Cplx(0, 0));
        for (std::size_t j = 0; j < n; ++j) w[j] = std::polar(1.0, k * g.points[j]);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) aw[r] += a[r * n + c] * w[c];
        const double lam = static_cast<double>(k) * static_cast<double>(k);
        double err = 0;
        for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(aw[j] - lam * w[j]));
        CHECK(err <= 1e-9 * std::max(1.0, lam));
    }
}

TEST_CASE("phase operator values and matrix-function agreement") {
    SpatialGrid g(16);
    PhaseOperator p1(g, 0.25, 1);
    CHECK(p1.freqs[0] == doctest::Approx(1.0));
    CHECK(p1.freqs[2] == doctest::Approx(std::sqrt(2.0)));  // k=2: sqrt(1 + 1/4 * 4)
    PhaseOperator p2(g, 0.5, 2);
    CHECK(p2.freqs[1] == doctest::Approx(std::sqrt(1.25)));
    // symmetric under k <-> -k, and >= 1
    for (std::size_t m = 0; m < 16; ++m) {
        CHECK(p1.freqs[m] >= 1.0);
        const int k = g.wavenumbers[m];
        for (std::size_t mm = 0; mm < 16; ++mm)
            if (g.wavenumbers[mm] == -k) CHECK(p1.freqs[m] == doctest::Approx(p1.freqs[mm]));
    }
    CHECK_THROWS_AS(PhaseOperator(g, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(PhaseOperator(g, 0.25, 3), std::invalid_argument);

    // (I + eps^a A_fd) e^{ikx} = phi_k^2 e^{ikx}: the diagonal multiplier is the
    // matrix function of the differentiation matrix
    const std::size_t n = 16;
    auto a = fourier_diff_matrix(n);
    for (std::size_t m = 0; m < n; ++m) {
        const int k = g.wavenumbers[m];
        std::vector<Cplx> w(n), bw(n, Cplx(0, 0));
        for (std::size_t j = 0; j < n; ++j) w[j] = std::polar(1.0, k * g.points[j]);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) bw[r] += 0.25 * a[r * n + c] * w[c];
            bw[r] += w[r];
        }
        double err = 0;
        for (std::size_t j = 0; j < n; ++j)
            err = std::max(err, std::abs(bw[j] - p1.freqs[m] * p1.freqs[m] * w[j]));
        CHECK(err <= 1e-10 * p1.freqs[m] * p1.freqs[m]);
    }
}

TEST_CASE("apply_trig basics and periodicity") {
    SpatialGrid g(8);
    PhaseOperator p(g, 0.5, 2);
    std::mt19937_64 rng(7);
    auto f = random_field(rng, 8);

    auto zero = apply_trig(p, TrigKind::sin, 0.0, f);
    for (const Cplx& z : zero) CHECK(std::abs(z) <= 1e-15);
    auto same = apply_trig(p, TrigKind::cos, 0.0, f);
    for (std::size_t m = 0; m < 8; ++m) CHECK(std::abs(same[m] - f[m]) <= 1e-15);

    // integer frequencies: cos is 2pi-periodic in the phase
    PhaseOperator ip = p;
    for (std::size_t m = 0; m < 8; ++m) ip.freqs[m] = static_cast<double>(1 + m % 3);
    auto c = apply_trig(ip, TrigKind::cos, kTwoPi, f);
    for (std::size_t m = 0; m < 8; ++m) CHECK(std::abs(c[m] - f[m]) <= 1e-12);

    // cos^2 + sin^2 = 1 mode-wise
    const double phase = 1234.56789;
    auto cs = apply_trig(p, TrigKind::cos, phase, f);
    auto sn = apply_trig(p, TrigKind::sin, phase, f);
    for (std::size_t m = 0; m < 8; ++m) {
        const double lhs = std::norm(cs[m]) + std::norm(sn[m]);
        CHECK(std::abs(lhs - std::norm(f[m])) <= 1e-12 * std::max(1.0, std::norm(f[m])));
    }
}

TEST_CASE("sobolev norm") {
    SpatialGrid g(16);
    FftPlan plan(16);

    std::vector<Cplx> c(16, Cplx(0, 0));
    c[0] = Cplx(-3.0, 4.0);  // constant field with |c| = 5
    CHECK(sobolev_norm(g, c, 0) == doctest::Approx(5.0));
    CHECK(sobolev_norm(g, c, 3) == doctest::Approx(5.0));

    std::vector<Cplx> e1(16, Cplx(0, 0));
    e1[1] = 1.0;  // e^{ix}
    CHECK(sobolev_norm(g, e1, 1) == doctest::Approx(std::sqrt(2.0)));

    // s = 0 equals the normalized grid L2 norm (Parseval)
    std::mt19937_64 rng(3);
    auto f = random_field(rng, 16);
    auto coeffs = to_coeffs(g, plan, f);
    double brute = 0;
    for (const Cplx& z : f) brute += std::norm(z);
    brute = std::sqrt(brute / 16.0);
    CHECK(sobolev_norm(g, coeffs, 0) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("fft plan handles non-power-of-two even sizes") {
    FftPlan plan(12);
    std::mt19937_64 rng(9);
    auto f = random_field(rng, 12);
    auto g = f;
    plan.forward(g.data());
    plan.inverse(g.data());
    for (std::size_t j = 0; j < 12; ++j) CHECK(std::abs(g[j] / 12.0 - f[j]) <= 1e-13);
}
