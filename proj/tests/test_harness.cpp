#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kgts/harness.hpp"

using namespace kgts;

namespace {
std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentPlan tiny_conv_plan(const std::filesystem::path& dir) {
    ExperimentPlan plan;
    plan.study = Study::conv_h;
    plan.methods = {Method::s2o2};
    plan.eps_list = {0.25};
    plan.h_list = {1.0 / 16, 1.0 / 32};
    plan.t_end = 0.5;
    plan.n_x = 8;
    plan.n_tau = 8;
    plan.out_dir = dir;
    return plan;
}
}  // namespace

TEST_CASE("property checks pass on a fresh build") {
    std::ostringstream os;
    ExperimentPlan plan;
    CHECK(run_checks(plan, os) == 0);
    const std::string report = os.str();
    CHECK(report.find("ALL CHECKS PASSED") != std::string::npos);
    CHECK(report.find("category tau-identities: 5/5 passed") != std::string::npos);
    CHECK(report.find("category phi-oracle: 1/1 passed") != std::string::npos);
}

TEST_CASE("corrupting b2 makes the symmetry check fail") {
    std::ostringstream os;
    ExperimentPlan plan;
    plan.corrupt_b2 = true;
    CHECK(run_checks(plan, os) == 1);
    CHECK(os.str().find("FAIL tableau-symmetry/s2o2") != std::string::npos);
}

TEST_CASE("convergence study emits deterministic byte-stable CSV") {
    const auto dir1 = std::filesystem::temp_directory_path() / "kgts_csv_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "kgts_csv_b";
    auto r1 = run_convergence_h(tiny_conv_plan(dir1));
    auto r2 = run_convergence_h(tiny_conv_plan(dir2));
    CHECK(slurp(dir1 / "conv_h.csv") == slurp(dir2 / "conv_h.csv"));
    CHECK(slurp(dir1 / "conv_h.fit.csv") == slurp(dir2 / "conv_h.fit.csv"));

    // every row carries the full parameter tuple and an ok status
    REQUIRE(r1.rows.size() == 2);
    for (const auto& row : r1.rows) {
        CHECK(row.status == "ok");
        CHECK(row.eps == 0.25);
        CHECK(row.errZ >= 0.0);
    }
    const std::string csv = slurp(dir1 / "conv_h.csv");
    CHECK(csv.rfind("method,eps,h,errZ,errZt,status\n", 0) == 0);
    CHECK(csv.find("s2o2,0.25,") != std::string::npos);
}

TEST_CASE("sweep results are identical under a capped worker pool") {
    const auto dir1 = std::filesystem::temp_directory_path() / "kgts_csv_serial";
    const auto dir2 = std::filesystem::temp_directory_path() / "kgts_csv_pool";
    setenv("KG_THREADS", "1", 1);
    run_convergence_h(tiny_conv_plan(dir1));
    setenv("KG_THREADS", "3", 1);
    run_convergence_h(tiny_conv_plan(dir2));
    unsetenv("KG_THREADS");
    CHECK(slurp(dir1 / "conv_h.csv") == slurp(dir2 / "conv_h.csv"));
}

TEST_CASE("empty method list gives a header-only CSV") {
    const auto dir = std::filesystem::temp_directory_path() / "kgts_csv_empty";
    ExperimentPlan plan;
    plan.study = Study::efficiency;
    plan.methods = {};
    plan.eps_list = {0.25};
    plan.h_list = {0.125};
    plan.out_dir = dir;
    const auto rows = run_efficiency(plan);
    CHECK(rows.empty());
    CHECK(slurp(dir / "efficiency.csv") == "method,eps,h,err,wall_seconds,status\n");
}

TEST_CASE("lambda = 0 control rows are exact for every h") {
    const auto dir = std::filesystem::temp_directory_path() / "kgts_csv_lin";
    ExperimentPlan plan = tiny_conv_plan(dir);
    plan.lambda = 0.0;
    plan.methods = {Method::s2o2, Method::s3o4};
    const auto res = run_convergence_h(plan);
    for (const auto& row : res.rows) {
        CHECK(row.status == "ok");
        CHECK(row.errZ <= 1e-10);
    }
}

TEST_CASE("energy study rows and drift statistics") {
    const auto dir = std::filesystem::temp_directory_path() / "kgts_energy";
    ExperimentPlan plan;
    plan.study = Study::energy;
    plan.methods = {Method::s2o2};
    plan.eps_list = {0.25};
    plan.h_list = {0.2};
    plan.t_end = 20.0;
    plan.n_x = 16;
    plan.n_tau = 16;
    plan.out_dir = dir;
    const auto res = run_energy(plan);
    REQUIRE_FALSE(res.rows.empty());
    CHECK(res.rows.front().t == 0.0);
    CHECK(res.rows.front().errH == 0.0);  // err_H vanishes at t = 0
    REQUIRE(res.drifts.size() == 1);
    CHECK(res.drifts[0].max_errH >= res.drifts[0].max_errH_first10);
    CHECK(res.drifts[0].drift >= 0.0);
    const std::string csv = slurp(dir / "energy.csv");
    CHECK(csv.rfind("method,eps,h,t,errH,status\n", 0) == 0);
}

TEST_CASE("efficiency err column equals errZ + errZt recomputed") {
    const auto dir = std::filesystem::temp_directory_path() / "kgts_eff";
    ExperimentPlan plan;
    plan.study = Study::efficiency;
    plan.methods = {Method::s2o2};
    plan.eps_list = {0.25};
    plan.h_list = {0.125, 0.03125};
    plan.n_x = 16;
    plan.n_tau = 16;
    plan.out_dir = dir;
    const auto rows = run_efficiency(plan);
    REQUIRE(rows.size() == 2);

    const ProblemSpec spec = plan.problem(0.25);
    RunConfig cfg = plan.config(Method::s2o2, 0.25, 0.125);
    cfg.t_end = 4.0;
    cfg.output_every = 0;
    RunConfig rcfg = plan.config(Method::s3o4, 0.25, 0.03125);
    rcfg.t_end = 4.0;
    const RunResult ref = reference_solution(spec, rcfg);
    const RunResult res = solve(spec, cfg);
    TwoScaleContext ctx(spec, 16, 16);
    const auto [ez, ezt] = relative_errors(ctx, res, ref, 4.0);
    CHECK(std::abs(rows[0].err - (ez + ezt)) <= 1e-15 * std::max(1.0, ez + ezt));

    // halving h three times increases the wall time (monotone within noise)
    CHECK(rows[1].wall_seconds >= 0.0);
    CHECK(rows[0].wall_seconds >= 0.0);
}
