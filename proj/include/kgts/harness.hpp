#ifndef KGTS_HARNESS_HPP
#define KGTS_HARNESS_HPP

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

#include "kgts/checks.hpp"
#include "kgts/solver.hpp"

namespace kgts {

enum class Study { conv_h, conv_eps, energy, efficiency, check };

inline Study study_from_name(const std::string& s) {
    if (s == "conv-h") return Study::conv_h;
    if (s == "conv-eps") return Study::conv_eps;
    if (s == "energy") return Study::energy;
    if (s == "efficiency") return Study::efficiency;
    if (s == "check") return Study::check;
    throw std::invalid_argument("unknown study: " + s);
}

/// Sweep description shared by the studies. Lists default to the grids of the
/// reference experiment: eps = 1/2^k (k = 1..5) and h = 1/2^k (k = 6..10) for
/// the convergence studies, h = 1/5 over t in [0, 1000] for the energy study,
/// h = 1/2^k (k = 1..6) over [0, 1/eps] for the efficiency study.
struct ExperimentPlan {
    Study study = Study::check;
    std::vector<Method> methods;
    std::vector<double> eps_list;
    std::vector<double> h_list;
    std::optional<double> t_end;  // study-dependent default when unset
    std::size_t n_x = 32;
    std::size_t n_tau = 64;
    double fp_tol = 1e-12;
    int fp_max_iter = 200;
    int kappa_trunc = 3;
    int freq_exponent = 1;
    double lambda = -1.0;
    double efficiency_t_factor = 1.0;  // efficiency horizon = factor / eps
    std::size_t output_every = 1;
    bool dump_tau = false;
    bool corrupt_b2 = false;
    std::filesystem::path out_dir = ".";

    void fill_defaults() {
        if (methods.empty()) {
            if (study == Study::energy)
                methods = {Method::s2o2, Method::s3o4, Method::nsm};
            else if (study == Study::efficiency)
                methods = {Method::isv, Method::nsm, Method::s2o2, Method::s3o4};
            else
                methods = {Method::isv, Method::s2o2, Method::s3o4};
        }
        if (eps_list.empty()) {
            if (study == Study::efficiency)
                eps_list = {0.25};
            else
                for (int k = 1; k <= 5; ++k) eps_list.push_back(std::pow(2.0, -k));
        }
        if (h_list.empty()) {
            if (study == Study::energy)
                h_list = {0.2};
            else if (study == Study::efficiency)
                for (int k = 1; k <= 6; ++k) h_list.push_back(std::pow(2.0, -k));
            else
                for (int k = 6; k <= 10; ++k) h_list.push_back(std::pow(2.0, -k));
        }
        if (!t_end) t_end = study == Study::energy ? 1000.0 : 1.0;
    }

    ProblemSpec problem(double eps) const {
        ProblemSpec s = default_problem(eps);
        s.lambda = lambda;
        s.freq_exponent = freq_exponent;
        return s;
    }

    RunConfig config(Method m, double eps, double h) const {
        (void)eps;
        RunConfig c;
        c.method = m;
        c.h = h;
        c.t_end = *t_end;
        c.n_x = n_x;
        c.n_tau = n_tau;
        c.fp_tol = fp_tol;
        c.fp_max_iter = fp_max_iter;
        c.kappa_trunc = kappa_trunc;
        c.output_every = output_every;
        c.dump_tau = dump_tau;
        return c;
    }
};

struct ConvRow {
    Method method;
    double eps, h;
    double errZ = 0.0, errZt = 0.0;
    std::string status = "ok";
};

struct EnergyRow {
    Method method;
    double eps, h, t;
    double errH = 0.0;
    std::string status = "ok";
};

struct EffRow {
    Method method;
    double eps, h;
    double err = 0.0, wall_seconds = 0.0;
    std::string status = "ok";
};

struct FitRow {
    Method method;
    double key;  // the eps (conv-h) or h (conv-eps) the fit belongs to
    double slope = 0.0, r2 = 0.0;
};

struct DriftRow {
    Method method;
    double eps, h;
    double drift = 0.0, max_errH = 0.0, max_errH_first10 = 0.0, final_errH = 0.0;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("KG_THREADS")) {
        const long cap = std::atol(env);
        if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

/// Runs fn(i) for i in [0, jobs) on a small worker pool; fn must not throw.
template <class Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
    if (jobs == 0) return;
    const std::size_t workers = worker_count(jobs);
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

struct LineFit {
    double slope = 0.0, r2 = 0.0;
    std::size_t points = 0;
};

/// Least-squares fit of log(y) against log(x), skipping points below the
/// floor or non-finite (reference-floor exclusion).
inline LineFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                          double floor_y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(ys[i]) || ys[i] < floor_y) continue;
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    LineFit fit;
    fit.points = lx.size();
    if (fit.points < 2) return fit;
    const double n = static_cast<double>(fit.points);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
        syy += ly[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    const double num = n * sxy - sx * sy;
    const double var = (n * sxx - sx * sx) * (n * syy - sy * sy);
    fit.r2 = var > 0 ? num * num / var : 1.0;
    return fit;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    f << content;
}

inline const char* status_of(const std::exception& e) {
    if (dynamic_cast<const ConvergenceError*>(&e)) return "nonconverged";
    if (dynamic_cast<const DivergenceError*>(&e)) return "diverged";
    return "error";
}

}  // namespace detail

inline constexpr double kReferenceFloor = 1e-11;  // errZ below this is reference noise

struct ConvStudyResult {
    std::vector<ConvRow> rows;
    std::vector<FitRow> fits;
};

namespace detail {

/// Shared implementation of the two convergence studies: errors at t_end
/// against an S3O4 reference per eps, one row per (method, eps, h).
inline ConvStudyResult run_convergence(const ExperimentPlan& plan_in, bool fit_in_h) {
    ExperimentPlan plan = plan_in;
    if (!plan.t_end) plan.t_end = 1.0;
    const double t_end = *plan.t_end;
    if (plan.methods.empty() || plan.eps_list.empty() || plan.h_list.empty()) return {};

    // Reference per eps, at the finest h of the sweep (h_ref = min(h/32, 2^-11)
    // evaluated at the smallest h serves every point of the sweep).
    const double h_min = *std::min_element(plan.h_list.begin(), plan.h_list.end());
    std::vector<RunResult> refs(plan.eps_list.size());
    std::vector<std::string> ref_status(plan.eps_list.size(), "ok");
    parallel_for(plan.eps_list.size(), [&](std::size_t i) {
        try {
            refs[i] = reference_solution(plan.problem(plan.eps_list[i]),
                                         plan.config(Method::s3o4, plan.eps_list[i], h_min));
        } catch (const std::exception& e) {
            ref_status[i] = status_of(e);
        }
    });

    const std::size_t n_eps = plan.eps_list.size(), n_h = plan.h_list.size();
    ConvStudyResult out;
    out.rows.resize(plan.methods.size() * n_eps * n_h);
    parallel_for(out.rows.size(), [&](std::size_t idx) {
        const std::size_t mi = idx / (n_eps * n_h);
        const std::size_t ei = (idx / n_h) % n_eps;
        const std::size_t hi = idx % n_h;
        ConvRow& row = out.rows[idx];
        row.method = plan.methods[mi];
        row.eps = plan.eps_list[ei];
        row.h = plan.h_list[hi];
        if (ref_status[ei] != "ok") {
            row.status = "reference-" + ref_status[ei];
            return;
        }
        try {
            const ProblemSpec spec = plan.problem(row.eps);
            RunConfig cfg = plan.config(row.method, row.eps, row.h);
            cfg.output_every = 0;
            const RunResult res = solve(spec, cfg);
            TwoScaleContext ctx(spec, plan.n_x, plan.n_tau);
            std::tie(row.errZ, row.errZt) = relative_errors(ctx, res, refs[ei], t_end);
        } catch (const std::exception& e) {
            row.status = status_of(e);
        }
    });

    // Fitted errZ slopes: per (method, eps) against h, or per (method, h)
    // against eps.
    const std::size_t groups = fit_in_h ? n_eps : n_h;
    for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) {
        for (std::size_t g = 0; g < groups; ++g) {
            std::vector<double> xs, ys;
            for (const ConvRow& r : out.rows) {
                if (r.method != plan.methods[mi] || r.status != "ok") continue;
                if (fit_in_h ? r.eps != plan.eps_list[g] : r.h != plan.h_list[g]) continue;
                xs.push_back(fit_in_h ? r.h : r.eps);
                ys.push_back(r.errZ);
            }
            const LineFit fit = loglog_fit(xs, ys, kReferenceFloor);
            if (fit.points >= 2)
                out.fits.push_back({plan.methods[mi], fit_in_h ? plan.eps_list[g] : plan.h_list[g],
                                    fit.slope, fit.r2});
        }
    }
    return out;
}

inline std::string conv_csv(const std::vector<ConvRow>& rows) {
    std::string s = "method,eps,h,errZ,errZt,status\n";
    for (const ConvRow& r : rows)
        s += method_name(r.method) + "," + fmt(r.eps) + "," + fmt(r.h) + "," + fmt(r.errZ) + "," +
             fmt(r.errZt) + "," + r.status + "\n";
    return s;
}

inline std::string fit_csv(const std::vector<FitRow>& rows) {
    std::string s = "method,eps_or_h,slope,r2\n";
    for (const FitRow& r : rows)
        s += method_name(r.method) + "," + fmt(r.key) + "," + fmt(r.slope) + "," + fmt(r.r2) + "\n";
    return s;
}

}  // namespace detail

/// Temporal convergence study: errZ/errZt at t_end for every (method, eps, h),
/// with per-(method, eps) log-log slopes in h. Writes conv_h.csv and
/// conv_h.fit.csv under plan.out_dir.
inline ConvStudyResult run_convergence_h(const ExperimentPlan& plan) {
    ConvStudyResult out = detail::run_convergence(plan, true);
    detail::write_file(plan.out_dir / "conv_h.csv", detail::conv_csv(out.rows));
    detail::write_file(plan.out_dir / "conv_h.fit.csv", detail::fit_csv(out.fits));
    return out;
}

/// Same sweep read along eps at fixed h; slopes are per (method, h) in eps.
inline ConvStudyResult run_convergence_eps(const ExperimentPlan& plan) {
    ConvStudyResult out = detail::run_convergence(plan, false);
    detail::write_file(plan.out_dir / "conv_eps.csv", detail::conv_csv(out.rows));
    detail::write_file(plan.out_dir / "conv_eps.fit.csv", detail::fit_csv(out.fits));
    return out;
}

struct EnergyStudyResult {
    std::vector<EnergyRow> rows;
    std::vector<DriftRow> drifts;
};

/// Long-time energy study: err_H time series per (method, eps) plus the drift
/// statistic mean(final quarter)/mean(first quarter) and the peak err_H over
/// the first ten fast periods (t <= 10 * 2 pi eps). Writes energy.csv and
/// energy.drift.csv.
inline EnergyStudyResult run_energy(const ExperimentPlan& plan_in) {
    ExperimentPlan plan = plan_in;
    if (!plan.t_end) plan.t_end = 1000.0;
    const std::size_t n_eps = plan.eps_list.size(), n_h = plan.h_list.size();
    const std::size_t jobs = plan.methods.size() * n_eps * n_h;

    struct Cell {
        std::vector<EnergyRow> rows;
        DriftRow drift;
        bool have_drift = false;
    };
    std::vector<Cell> cells(jobs);
    detail::parallel_for(jobs, [&](std::size_t idx) {
        const std::size_t mi = idx / (n_eps * n_h);
        const std::size_t ei = (idx / n_h) % n_eps;
        const std::size_t hi = idx % n_h;
        const Method method = plan.methods[mi];
        const double eps = plan.eps_list[ei];
        const double h = plan.h_list[hi];
        Cell& cell = cells[idx];
        try {
            const RunResult res = solve(plan.problem(eps), plan.config(method, eps, h));
            const double h0 = res.energies.front();
            std::vector<double> err(res.energies.size());
            for (std::size_t i = 0; i < err.size(); ++i)
                err[i] = std::abs(res.energies[i] - h0) / std::abs(h0);
            cell.rows.reserve(err.size());
            for (std::size_t i = 0; i < err.size(); ++i)
                cell.rows.push_back({method, eps, h, res.times[i], err[i], "ok"});

            DriftRow d{method, eps, h, 0.0, 0.0, 0.0, err.back()};
            const std::size_t q = std::max<std::size_t>(1, err.size() / 4);
            double first = 0.0, last = 0.0;
            for (std::size_t i = 0; i < q; ++i) first += err[i];
            for (std::size_t i = err.size() - q; i < err.size(); ++i) last += err[i];
            d.drift = first > 0.0 ? last / first : (last > 0.0 ? HUGE_VAL : 1.0);
            const double t10 = 10.0 * kTwoPi * eps;
            for (std::size_t i = 0; i < err.size(); ++i) {
                d.max_errH = std::max(d.max_errH, err[i]);
                if (res.times[i] <= t10) d.max_errH_first10 = std::max(d.max_errH_first10, err[i]);
            }
            cell.drift = d;
            cell.have_drift = true;
        } catch (const std::exception& e) {
            cell.rows.push_back({method, eps, h, 0.0, 0.0, detail::status_of(e)});
        }
    });

    EnergyStudyResult out;
    for (Cell& c : cells) {
        out.rows.insert(out.rows.end(), c.rows.begin(), c.rows.end());
        if (c.have_drift) out.drifts.push_back(c.drift);
    }
    std::string s = "method,eps,h,t,errH,status\n";
    for (const EnergyRow& r : out.rows)
        s += method_name(r.method) + "," + detail::fmt(r.eps) + "," + detail::fmt(r.h) + "," +
             detail::fmt(r.t) + "," + detail::fmt(r.errH) + "," + r.status + "\n";
    detail::write_file(plan.out_dir / "energy.csv", s);
    std::string d = "method,eps,h,drift,max_errH,max_errH_first10,final_errH\n";
    for (const DriftRow& r : out.drifts)
        d += method_name(r.method) + "," + detail::fmt(r.eps) + "," + detail::fmt(r.h) + "," +
             detail::fmt(r.drift) + "," + detail::fmt(r.max_errH) + "," +
             detail::fmt(r.max_errH_first10) + "," + detail::fmt(r.final_errH) + "\n";
    detail::write_file(plan.out_dir / "energy.drift.csv", d);
    return out;
}

/// Work-precision data: err = errZ + errZt at t = factor/eps against the wall
/// time of the method run (references excluded from the timing). Writes
/// efficiency.csv.
inline std::vector<EffRow> run_efficiency(const ExperimentPlan& plan_in) {
    ExperimentPlan plan = plan_in;
    if (!plan.t_end) plan.t_end = 1.0;
    if (plan.methods.empty() || plan.eps_list.empty() || plan.h_list.empty()) {
        detail::write_file(plan.out_dir / "efficiency.csv", "method,eps,h,err,wall_seconds,status\n");
        return {};
    }

    std::vector<RunResult> refs(plan.eps_list.size());
    std::vector<std::string> ref_status(plan.eps_list.size(), "ok");
    const double h_min = *std::min_element(plan.h_list.begin(), plan.h_list.end());
    detail::parallel_for(plan.eps_list.size(), [&](std::size_t i) {
        try {
            RunConfig cfg = plan.config(Method::s3o4, plan.eps_list[i], h_min);
            cfg.t_end = plan.efficiency_t_factor / plan.eps_list[i];
            refs[i] = reference_solution(plan.problem(plan.eps_list[i]), cfg);
        } catch (const std::exception& e) {
            ref_status[i] = detail::status_of(e);
        }
    });

    const std::size_t n_eps = plan.eps_list.size(), n_h = plan.h_list.size();
    std::vector<EffRow> rows(plan.methods.size() * n_eps * n_h);
    detail::parallel_for(rows.size(), [&](std::size_t idx) {
        const std::size_t mi = idx / (n_eps * n_h);
        const std::size_t ei = (idx / n_h) % n_eps;
        const std::size_t hi = idx % n_h;
        EffRow& row = rows[idx];
        row.method = plan.methods[mi];
        row.eps = plan.eps_list[ei];
        row.h = plan.h_list[hi];
        if (ref_status[ei] != "ok") {
            row.status = "reference-" + ref_status[ei];
            return;
        }
        try {
            const ProblemSpec spec = plan.problem(row.eps);
            RunConfig cfg = plan.config(row.method, row.eps, row.h);
            cfg.t_end = plan.efficiency_t_factor / row.eps;
            cfg.output_every = 0;
            const RunResult res = solve(spec, cfg);
            row.wall_seconds = res.wall_seconds;
            TwoScaleContext ctx(spec, plan.n_x, plan.n_tau);
            const auto [ez, ezt] = relative_errors(ctx, res, refs[ei], cfg.t_end);
            row.err = ez + ezt;
        } catch (const std::exception& e) {
            row.status = detail::status_of(e);
        }
    });

    std::string s = "method,eps,h,err,wall_seconds,status\n";
    for (const EffRow& r : rows)
        s += method_name(r.method) + "," + detail::fmt(r.eps) + "," + detail::fmt(r.h) + "," +
             detail::fmt(r.err) + "," + detail::fmt(r.wall_seconds) + "," + r.status + "\n";
    detail::write_file(plan.out_dir / "efficiency.csv", s);
    return rows;
}

/// Runs the property suite, prints one line per check plus per-category
/// counts. Returns 0 when everything passes, 1 otherwise.
inline int run_checks(const ExperimentPlan& plan, std::ostream& os) {
    CheckOptions opt;
    opt.corrupt_b2 = plan.corrupt_b2;
    const auto results = run_property_checks(opt);
    std::map<std::string, std::pair<int, int>> tally;  // category -> (pass, total)
    for (const CheckResult& c : results) {
        os << (c.pass ? "PASS" : "FAIL") << " " << c.category << "/" << c.name << " value="
           << detail::fmt(c.value) << " bound=" << detail::fmt(c.bound);
        if (!c.detail.empty()) os << " (" << c.detail << ")";
        os << "\n";
        auto& t = tally[c.category];
        t.first += c.pass ? 1 : 0;
        t.second += 1;
    }
    bool all = true;
    for (const auto& [cat, t] : tally) {
        os << "category " << cat << ": " << t.first << "/" << t.second << " passed\n";
        if (t.first != t.second) all = false;
    }
    os << (all ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT") << "\n";
    return all ? 0 : 1;
}

}  // namespace kgts

#endif
