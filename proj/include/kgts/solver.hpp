#ifndef KGTS_SOLVER_HPP
#define KGTS_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kgts/common.hpp"
#include "kgts/expint.hpp"
#include "kgts/isv.hpp"
#include "kgts/twoscale.hpp"

namespace kgts {

enum class Method { s2o2, s3o4, nsm, isv };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::s2o2: return "s2o2";
        case Method::s3o4: return "s3o4";
        case Method::nsm: return "nsm";
        case Method::isv: return "isv";
    }
    return "?";
}

inline Method method_from_name(const std::string& s) {
    if (s == "s2o2") return Method::s2o2;
    if (s == "s3o4") return Method::s3o4;
    if (s == "nsm") return Method::nsm;
    if (s == "isv") return Method::isv;
    throw std::invalid_argument("unknown method: " + s);
}

struct RunConfig {
    double h = 0.1;
    double t_end = 1.0;
    std::size_t n_x = 32;
    std::size_t n_tau = 64;
    Method method = Method::s2o2;
    double fp_tol = 1e-12;
    int fp_max_iter = 200;
    int kappa_trunc = 3;
    std::size_t output_every = 1;  // 0 keeps only the endpoints
    bool dump_tau = false;

    void validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("RunConfig: h must be positive");
        if (!(t_end >= 0.0)) throw std::invalid_argument("RunConfig: t_end must be >= 0");
        // the horizon is rounded to a whole number of steps (t_end/h stays
        // within one step of an integer by construction)
        if (n_x < 4 || n_x % 2 != 0) throw std::invalid_argument("RunConfig: n_x must be even >= 4");
        if (n_tau < 4 || n_tau % 2 != 0)
            throw std::invalid_argument("RunConfig: n_tau must be even >= 4");
        if (!(fp_tol > 0.0)) throw std::invalid_argument("RunConfig: fp_tol must be positive");
        if (kappa_trunc < 0 || kappa_trunc > 3)
            throw std::invalid_argument("RunConfig: kappa_trunc must be in 0..3");
    }
};

struct RunResult {
    std::vector<double> times;
    std::vector<std::vector<Cplx>> u;  // reconstructed u^n, Fourier coefficients
    std::vector<std::vector<Cplx>> v;  // reconstructed v^n = (d/dt) u at t = eps * t_tilde
    std::vector<double> energies;
    std::vector<TauField> tau_snapshots;  // filled when dump_tau is set
    long total_iterations = 0;
    int max_iterations = 0;
    double wall_seconds = 0.0;
    bool reference_grade = false;
};

/// Diagonal of M = i Omega, one entry per (tau-row, slot): applying
/// d/dt + (1/eps) d/tau to e^{ik tau} gives the multiplier -ik/eps for
/// tau-mode k, the same for every component/spatial slot. The dispersive
/// remainder of the frequency operator is NOT part of M; it rides along as an
/// exact unitary rotation of the nonlinearity (see solve), which keeps the
/// scheme's resonance denominators exactly those of the k/eps ladder.
/// Row-major (n_tau+1) x slots.
inline std::vector<Cplx> build_M(std::size_t n_tau, std::size_t slots, double eps) {
    std::vector<Cplx> m((n_tau + 1) * slots);
    for (std::size_t r = 0; r <= n_tau; ++r) {
        const double k = static_cast<double>(static_cast<int>(r) - static_cast<int>(n_tau / 2));
        Cplx* row = m.data() + r * slots;
        for (std::size_t s = 0; s < slots; ++s) row[s] = Cplx(0.0, -k / eps);
    }
    return m;
}

inline std::vector<Cplx> build_M(const TwoScaleContext& ctx) {
    return build_M(ctx.n_tau(), ctx.slots(), ctx.spec().eps);
}

/// Energy functional of the Klein-Gordon flow with frequency exponent a:
///   H = (2pi/n) sum_j [ eps^2 |v_j|^2 + eps^{a-2} |grad u_j|^2
///                       + (1/eps^2)|u_j|^2 + lambda H1(u_j) ],
/// quadratic terms evaluated spectrally. The gradient weight eps^{a-2}
/// matches the configured operator (plain |grad u|^2 at a = 2), so H is the
/// invariant of the flow actually being integrated.
inline double energy(const TwoScaleContext& ctx, std::span<const Cplx> u, std::span<const Cplx> v) {
    const double eps = ctx.spec().eps;
    const int a = ctx.spec().freq_exponent;
    const double grad_w = a == 2 ? 1.0 : 1.0 / eps;
    double quad = 0.0;
    for (std::size_t m = 0; m < ctx.n_x(); ++m) {
        const double k = static_cast<double>(ctx.grid().wavenumbers[m]);
        quad += eps * eps * std::norm(v[m]) + (grad_w * k * k + 1.0 / (eps * eps)) * std::norm(u[m]);
    }
    std::vector<Cplx> uv = to_values(ctx.grid(), ctx.plan_x(), u);
    double pot = 0.0;
    for (const Cplx& z : uv) pot += ctx.spec().nonlin.h1(z);
    return kTwoPi * quad + kTwoPi / static_cast<double>(ctx.n_x()) * ctx.spec().lambda * pot;
}

/// (u, v) from the filtered pair (Z_U, Z_V) at the scalar phase
/// theta = t_tilde / eps (the dispersive part of the full phase lives in the
/// filtered variables themselves):
///   u = Phi^{-1}[cos(theta) Z_U + sin(theta) Z_V]
///   v = eps^{-2}[-sin(theta) Z_U + cos(theta) Z_V].
inline void reconstruct_uv(const TwoScaleContext& ctx, std::span<const Cplx> zu,
                           std::span<const Cplx> zv, double theta, std::vector<Cplx>& u,
                           std::vector<Cplx>& v) {
    const std::size_t n = ctx.n_x();
    const double inv_eps2 = 1.0 / (ctx.spec().eps * ctx.spec().eps);
    const double th = phase_mod_two_pi(theta);
    const double ct = std::cos(th), st = std::sin(th);
    u.resize(n);
    v.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        u[m] = (ct * zu[m] + st * zv[m]) / ctx.phase().freqs[m];
        v[m] = inv_eps2 * (-st * zu[m] + ct * zv[m]);
    }
}

/// Inverse of reconstruct_uv: the filtered pair from (u, v) at phase theta.
inline void filter_qp(const TwoScaleContext& ctx, std::span<const Cplx> u, std::span<const Cplx> v,
                      double theta, std::vector<Cplx>& zu, std::vector<Cplx>& zv) {
    const std::size_t n = ctx.n_x();
    const double eps2 = ctx.spec().eps * ctx.spec().eps;
    const double th = phase_mod_two_pi(theta);
    const double ct = std::cos(th), st = std::sin(th);
    zu.resize(n);
    zv.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const Cplx pu = ctx.phase().freqs[m] * u[m];
        const Cplx pv = eps2 * v[m];
        zu[m] = ct * pu - st * pv;
        zv[m] = st * pu + ct * pv;
    }
}

inline Tableau tableau_for(Method m) {
    switch (m) {
        case Method::s2o2: return tableau_s2o2();
        case Method::s3o4: return tableau_s3o4();
        case Method::nsm: return tableau_nsm();
        default: throw std::invalid_argument("tableau_for: not an exponential integrator");
    }
}

/// Run the fully discrete scheme (or the ISV baseline) to t_end, recording
/// reconstructed states and energies at the output cadence. Deterministic:
/// fixed iteration order, no randomness.
inline RunResult solve(const ProblemSpec& spec, const RunConfig& config) {
    config.validate();
    TwoScaleContext ctx(spec, config.n_x, config.n_tau);
    const long n_steps = std::lround(config.t_end / config.h);
    const double eps = spec.eps;

    RunResult out;
    const auto t0 = std::chrono::steady_clock::now();

    auto record_uv = [&](double t, std::vector<Cplx>&& u, std::vector<Cplx>&& v) {
        out.times.push_back(t);
        out.energies.push_back(energy(ctx, u, v));
        out.u.push_back(std::move(u));
        out.v.push_back(std::move(v));
    };

    if (config.method == Method::isv) {
        auto traj = isv_solve(ctx, config.h, config.t_end, config.output_every);
        for (auto& s : traj) {
            std::vector<Cplx> v = s.zt;
            for (Cplx& z : v) z /= eps;  // v = du/dt = (1/eps) dZ/dt_tilde
            record_uv(s.t, std::move(s.z), std::move(v));
        }
    } else {
        ExpIntStepper stepper(tableau_for(config.method), config.h, eps, build_M(ctx),
                              StepOptions{config.fp_tol, config.fp_max_iter});
        GammaScratch scratch;
        // The state is the co-rotating field W (w± basis): the dispersive
        // rotation e^{i t D} is applied exactly around the torus nonlinearity
        // at each stage time, so Gamma keeps its Lipschitz constant and the
        // linear part keeps the -ik/eps phases.
        double t_n = 0.0;
        TauField zrot(config.n_tau, 2 * config.n_x);
        auto gamma = [&](const TauField& in, TauField& g, double c) {
            zrot = in;
            const double ts = t_n + c * config.h;
            ctx.rotate_pm(zrot, ts);
            ctx.gamma_pm_into(zrot, g, scratch);
            ctx.rotate_pm(g, -ts);
        };

        TauField z = ctx.uv_to_pm(ctx.prepared_initial_data(config.kappa_trunc));
        auto record_state = [&](long n) {
            const double t = config.h * static_cast<double>(n);
            const double theta = t / eps;
            TauField zfil = z;
            ctx.rotate_pm(zfil, t);  // W -> Z at the current time
            const TauField zuv = ctx.pm_to_uv(zfil);
            std::vector<Cplx> zn = tau_eval(zuv, theta);
            std::vector<Cplx> u, v;
            reconstruct_uv(ctx, std::span<const Cplx>(zn.data(), ctx.n_x()),
                           std::span<const Cplx>(zn.data() + ctx.n_x(), ctx.n_x()), theta, u, v);
            record_uv(t, std::move(u), std::move(v));
            if (config.dump_tau) out.tau_snapshots.push_back(zuv);
        };
        record_state(0);
        for (long n = 1; n <= n_steps; ++n) {
            StepStats st;
            t_n = config.h * static_cast<double>(n - 1);
            try {
                z = stepper.step(z, gamma, &st);
            } catch (const ConvergenceError& e) {
                throw ConvergenceError(std::string(e.what()) + " at step " + std::to_string(n) +
                                           ", t = " + std::to_string(config.h * n),
                                       e.residual(), e.iterations());
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(n) +
                                      ", t = " + std::to_string(config.h * n));
            }
            out.total_iterations += st.iterations;
            out.max_iterations = std::max(out.max_iterations, st.iterations);
            if (n == n_steps || (config.output_every != 0 &&
                                 n % static_cast<long>(config.output_every) == 0))
                record_state(n);
        }
    }

    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// Relative errors at a matching output time:
///   errZ  = |u_num - u_ref|_{H^1} / |u_ref|_{H^1}
///   errZt = |v_num - v_ref|_{H^0} / |v_ref|_{H^0}.
inline std::pair<double, double> relative_errors(const TwoScaleContext& ctx, const RunResult& num,
                                                 const RunResult& ref, double at) {
    auto find = [&](const RunResult& r) -> std::size_t {
        const double tol = 1e-9 * std::max(1.0, std::abs(at));
        for (std::size_t i = 0; i < r.times.size(); ++i)
            if (std::abs(r.times[i] - at) <= tol) return i;
        throw std::invalid_argument("relative_errors: time " + std::to_string(at) +
                                    " not present in both results");
    };
    const std::size_t i = find(num), j = find(ref);
    const std::size_t n = ctx.n_x();
    std::vector<Cplx> du(n), dv(n);
    for (std::size_t m = 0; m < n; ++m) {
        du[m] = num.u[i][m] - ref.u[j][m];
        dv[m] = num.v[i][m] - ref.v[j][m];
    }
    const double err_z = sobolev_norm(ctx.grid(), du, 1) / sobolev_norm(ctx.grid(), ref.u[j], 1);
    const double err_zt = sobolev_norm(ctx.grid(), dv, 0) / sobolev_norm(ctx.grid(), ref.v[j], 0);
    return {err_z, err_zt};
}

/// Reference trajectory: S3O4 with h_ref = min(h/32, 2^-11) at the same
/// spatial and tau resolution, endpoints only.
inline RunResult reference_solution(const ProblemSpec& spec, const RunConfig& config) {
    RunConfig ref = config;
    ref.method = Method::s3o4;
    ref.h = std::min(config.h / 32.0, std::pow(2.0, -11));
    ref.output_every = 0;
    RunResult out = solve(spec, ref);
    out.reference_grade = true;
    return out;
}

}  // namespace kgts

#endif
