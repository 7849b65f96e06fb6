// Experiment driver for the two-scale Klein-Gordon integrators: runs the
// convergence, energy and efficiency sweeps and the property-check suite,
// writing CSV files under --out. Options can also come from a flat
// key=value config file (# comments); command-line flags win.

#include <CLI11.hpp>
#include <iostream>

#include "kgts/kgts.hpp"

int main(int argc, char** argv) {
    CLI::App app{"two-scale exponential integrators for the oscillatory Klein-Gordon equation"};
    app.set_help_flag("--help", "print usage");  // frees -h/--h for the step size
    app.set_config("--config", "", "flat key=value config file; flags override");

    std::string study_name = "check";
    std::vector<std::string> method_names;
    kgts::ExperimentPlan plan;
    std::string out_dir = ".";

    app.add_option("--study", study_name, "conv-h | conv-eps | energy | efficiency | check")
        ->check(CLI::IsMember({"conv-h", "conv-eps", "energy", "efficiency", "check"}));
    app.add_option("--method", method_names, "method (repeatable): isv | nsm | s2o2 | s3o4");
    app.add_option("--eps", plan.eps_list, "epsilon value (repeatable)");
    app.add_option("--h", plan.h_list, "time step (repeatable)");
    app.add_option("--nx", plan.n_x, "spatial collocation points (even)");
    app.add_option("--ntau", plan.n_tau, "tau collocation points (even)");
    double t_end = -1.0;
    app.add_option("--t-end", t_end, "horizon in rescaled time (study default when omitted)");
    app.add_option("--fp-tol", plan.fp_tol, "fixed-point tolerance");
    app.add_option("--fp-max-iter", plan.fp_max_iter, "fixed-point iteration cap");
    app.add_option("--kappa-trunc", plan.kappa_trunc, "initial-data correction order 0..3");
    app.add_option("--freq-exponent", plan.freq_exponent, "frequency operator exponent 1|2");
    app.add_option("--lambda", plan.lambda, "nonlinearity coupling");
    app.add_option("--efficiency-t-factor", plan.efficiency_t_factor,
                   "efficiency horizon = factor/eps");
    app.add_option("--out", out_dir, "output directory for CSV files");
    app.add_flag("--dump-tau", plan.dump_tau, "keep tau-coefficient snapshots in memory");
    app.add_flag("--corrupt-b2", plan.corrupt_b2, "fault-injection hook for the check suite")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        plan.study = kgts::study_from_name(study_name);
        for (const std::string& m : method_names)
            plan.methods.push_back(kgts::method_from_name(m));
        if (t_end >= 0.0) plan.t_end = t_end;
        plan.out_dir = out_dir;
        plan.fill_defaults();

        if (plan.study == kgts::Study::check) return kgts::run_checks(plan, std::cout);

        auto summarize = [&](std::size_t ok, std::size_t total) {
            std::cout << "wrote " << out_dir << ": " << ok << "/" << total << " sweep points ok\n";
            if (total > 0 && ok == 0) return 2;
            return 0;
        };
        switch (plan.study) {
            case kgts::Study::conv_h: {
                const auto r = kgts::run_convergence_h(plan);
                std::size_t ok = 0;
                for (const auto& row : r.rows) ok += row.status == "ok";
                return summarize(ok, r.rows.size());
            }
            case kgts::Study::conv_eps: {
                const auto r = kgts::run_convergence_eps(plan);
                std::size_t ok = 0;
                for (const auto& row : r.rows) ok += row.status == "ok";
                return summarize(ok, r.rows.size());
            }
            case kgts::Study::energy: {
                const auto r = kgts::run_energy(plan);
                std::size_t ok = 0, total = 0;
                for (const auto& row : r.rows)
                    if (row.t == 0.0 || row.status != "ok") {
                        ok += row.status == "ok";
                        ++total;
                    }
                return summarize(ok, total);
            }
            case kgts::Study::efficiency: {
                const auto r = kgts::run_efficiency(plan);
                std::size_t ok = 0;
                for (const auto& row : r) ok += row.status == "ok";
                return summarize(ok, r.size());
            }
            default: return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "kgts: " << e.what() << "\n";
        return 2;
    }
}
