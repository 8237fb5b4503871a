// Command-line frontend: data generation, exact solves, oracles, the
// projected power method, closed-form thresholds, and the experiment sweep.
//
// Exit codes: 0 success, 2 validation error, 3 solver limit reached (the
// report file is still written in that case).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rspca/experiment.hpp"
#include "rspca/heuristics.hpp"
#include "rspca/io.hpp"
#include "rspca/micp.hpp"
#include "rspca/perturb.hpp"
#include "rspca/solver.hpp"
#include "rspca/stats.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolverLimit = 3;

void print_sparse(const rspca::KSparseVector& v) {
    std::printf("support:");
    for (std::size_t i : v.support) std::printf(" %zu", i);
    std::printf("\nvalues:");
    for (double x : v.values) std::printf(" %.9g", x);
    std::printf("\n");
}

rspca::UncertaintyKind parse_perturb(const std::string& name) {
    if (name == "samplewise") return rspca::UncertaintyKind::SampleWise;
    if (name == "featurewise") return rspca::UncertaintyKind::FeatureWise;
    throw CLI::ValidationError("--perturb", "expected samplewise|featurewise");
}

struct GenArgs {
    std::size_t d = 10, n = 100, k = 3;
    double lambda = 3.0;
    std::uint64_t seed = 0;
    std::string truth = "spiked";
    double c = 0.8;
    std::size_t k1 = 1, k2 = 1;
    std::string out, truth_out;
};

int run_gen(const GenArgs& args) {
    rspca::KSparseVector v_star;
    if (args.truth == "spiked") {
        v_star.d = args.d;
        const double entry = 1.0 / std::sqrt(static_cast<double>(args.k));
        for (std::size_t i = 0; i < args.k; ++i) {
            v_star.support.push_back(i);
            v_star.values.push_back(entry);
        }
    } else if (args.truth == "strongweak") {
        rspca::StrongWeakSpec spec;
        spec.c = args.c;
        spec.k1 = args.k1;
        spec.k2 = args.k2;
        v_star = rspca::build_strong_weak_truth(spec, args.d);
    } else {
        throw CLI::ValidationError("--truth", "expected spiked|strongweak");
    }

    rspca::SpikedModel model;
    model.d = args.d;
    model.lambda = args.lambda;
    model.v_star = v_star;
    rspca::SampleMatrix X = rspca::sample_spiked(model, args.n, args.seed);

    rspca::write_sample_matrix(args.out, X);
    rspca::write_sparse_vector(args.truth_out, v_star);
    std::printf("wrote %zux%zu samples to %s, truth to %s\n", X.n, X.d,
                args.out.c_str(), args.truth_out.c_str());
    return kExitOk;
}

struct SolveArgs {
    std::string input, perturb = "featurewise", formulation = "full";
    std::string mode = "enumerate", report;
    double rho = 0.0;
    std::size_t k = 1, r = 1;
    int N = 3;
    double time_limit = 0.0;
    double abs_gap = 1e-4, rel_gap = 1e-3;
    long node_limit = 1000000;
    bool no_timing = false;
};

int run_solve(const SolveArgs& args) {
    rspca::SampleMatrix X = rspca::read_sample_matrix(args.input);
    rspca::EigenBasis eigen =
        rspca::symmetric_eigendecomposition(rspca::covariance_from_samples(X));
    rspca::UncertaintyKind kind = parse_perturb(args.perturb);

    rspca::MicpModel model;
    if (args.formulation == "full") {
        model = (kind == rspca::UncertaintyKind::SampleWise)
                    ? rspca::build_samplewise_full(X, eigen, args.k, args.rho, args.N)
                    : rspca::build_featurewise_full(X, eigen, args.k, args.rho, args.N);
    } else if (args.formulation == "rankr") {
        model =
            (kind == rspca::UncertaintyKind::SampleWise)
                ? rspca::build_samplewise_rank_r(X, eigen, args.k, args.rho, args.N,
                                                 args.r)
                : rspca::build_featurewise_rank_r(X, eigen, args.k, args.rho, args.N,
                                                  args.r);
    } else {
        throw CLI::ValidationError("--formulation", "expected full|rankr");
    }

    rspca::SolverOptions opts;
    opts.abs_gap = args.abs_gap;
    opts.rel_gap = args.rel_gap;
    opts.node_limit = args.node_limit;
    if (args.mode == "enumerate") {
        opts.mode = rspca::SolveMode::EnumerateSupports;
    } else if (args.mode == "branch") {
        opts.mode = rspca::SolveMode::BranchBinaries;
    } else {
        throw CLI::ValidationError("--mode", "expected enumerate|branch");
    }
    if (args.time_limit > 0.0) opts.time_limit_s = args.time_limit;
    if (args.no_timing) opts.timing = false;

    rspca::SolveReport report = rspca::solve(model, opts);
    std::string json = rspca::solve_report_to_json(model, report);
    if (!args.report.empty()) {
        std::ofstream out(args.report, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open report file: " + args.report);
        out << json << "\n";
    }
    std::printf("lb=%.9g ub=%.9g gap=%.9g nodes=%ld status=%s\n", report.lb, report.ub,
                report.gap, report.nodes, rspca::status_name(report.status));

    if (report.status == rspca::SolveStatus::NodeLimit ||
        report.status == rspca::SolveStatus::TimeLimit) {
        return kExitSolverLimit;
    }
    return kExitOk;
}

struct OracleArgs {
    std::string input, perturb = "featurewise";
    double rho = 0.0;
    std::size_t k = 1;
    double resolution = 1e-3;
};

int run_oracle(const OracleArgs& args) {
    rspca::SampleMatrix X = rspca::read_sample_matrix(args.input);
    rspca::OracleResult res = rspca::brute_force_oracle(
        X, args.k, args.rho, parse_perturb(args.perturb), args.resolution);
    std::printf("value: %.12g\n", res.value);
    print_sparse(res.argmax);
    return kExitOk;
}

struct PpmArgs {
    std::string input, init = "spca";
    double rho = 0.0;
    std::size_t k = 1;
    int max_iter = 1000;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

int run_ppm(const PpmArgs& args) {
    rspca::SampleMatrix X = rspca::read_sample_matrix(args.input);
    rspca::PpmOptions opts;
    opts.max_iter = args.max_iter;
    opts.tol = args.tol;
    opts.seed = args.seed;
    if (args.init == "spca") {
        opts.init = rspca::PpmInit::FromSpca;
    } else if (args.init == "random") {
        opts.init = rspca::PpmInit::Random;
    } else {
        throw CLI::ValidationError("--init", "expected spca|random");
    }
    rspca::PpmResult res = rspca::ppm(X, args.k, args.rho, opts);
    double value = res.trace.empty() ? 0.0 : res.trace.back();
    std::printf("value: %.12g\niters: %d\n", value, res.iters);
    print_sparse(res.v);
    return kExitOk;
}

struct ThresholdArgs {
    double lambda = 3.0;
    std::size_t n = 500;
    std::size_t k = 0;
    double delta = -1.0;
    double c = -1.0;
    std::size_t k1 = 0, k2 = 0;
};

int run_thresholds(const ThresholdArgs& args) {
    bool recovery_form = args.k > 0 && args.delta > 0.0;
    bool stage_form = args.c > 0.0 && args.k1 > 0 && args.k2 > 0;
    if (recovery_form == stage_form) {
        throw CLI::ValidationError(
            "thresholds", "give either --k with --delta, or --c with --k1 --k2");
    }
    if (recovery_form) {
        rspca::ThresholdQuery q;
        q.delta = args.delta;
        q.lambda = args.lambda;
        q.n = args.n;
        q.k = args.k;
        std::printf("recovery_threshold: %.9g\n", rspca::recovery_threshold(q));
    } else {
        rspca::StageThresholds th =
            rspca::stage_thresholds(args.lambda, args.n, args.c, args.k1, args.k2);
        std::printf("robust_lower: %.9g\nrobust_upper: %.9g\nwindow_nonempty: %s\n",
                    th.robust_lower, th.robust_upper,
                    th.window_nonempty ? "true" : "false");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust sparse principal component toolkit"};
    app.require_subcommand(1);
    int result = kExitOk;

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate spiked sample data");
    cmd_gen->add_option("--d", gen.d, "ambient dimension")->required();
    cmd_gen->add_option("--n", gen.n, "sample count")->required();
    cmd_gen->add_option("--k", gen.k, "truth sparsity")->required();
    cmd_gen->add_option("--lambda", gen.lambda, "spike eigengap")->required();
    cmd_gen->add_option("--seed", gen.seed, "random seed")->required();
    cmd_gen->add_option("--truth", gen.truth, "spiked|strongweak");
    cmd_gen->add_option("--c", gen.c, "strong signal fraction");
    cmd_gen->add_option("--k1", gen.k1, "strong support size");
    cmd_gen->add_option("--k2", gen.k2, "weak support size");
    cmd_gen->add_option("--out", gen.out, "sample matrix output path")->required();
    cmd_gen->add_option("--truth-out", gen.truth_out, "truth vector output path")
        ->required();
    cmd_gen->callback([&]() { result = run_gen(gen); });

    SolveArgs solve_args;
    CLI::App* cmd_solve = app.add_subcommand("solve", "certified exact solve");
    cmd_solve->add_option("--input", solve_args.input, "sample matrix path")->required();
    cmd_solve->add_option("--perturb", solve_args.perturb, "samplewise|featurewise");
    cmd_solve->add_option("--rho", solve_args.rho, "perturbation magnitude")->required();
    cmd_solve->add_option("--k", solve_args.k, "sparsity")->required();
    cmd_solve->add_option("--formulation", solve_args.formulation, "full|rankr");
    cmd_solve->add_option("--r", solve_args.r, "retained spectral terms");
    cmd_solve->add_option("--N", solve_args.N, "secant grid half-resolution")->required();
    cmd_solve->add_option("--mode", solve_args.mode, "enumerate|branch");
    cmd_solve->add_option("--time-limit", solve_args.time_limit, "seconds");
    cmd_solve->add_option("--abs-gap", solve_args.abs_gap, "absolute gap target");
    cmd_solve->add_option("--rel-gap", solve_args.rel_gap, "relative gap target");
    cmd_solve->add_option("--node-limit", solve_args.node_limit, "node budget");
    cmd_solve->add_flag("--no-timing", solve_args.no_timing,
                        "never consult the wall clock (deterministic output)");
    cmd_solve->add_option("--report", solve_args.report, "JSON report path");
    cmd_solve->callback([&]() { result = run_solve(solve_args); });

    OracleArgs oracle_args;
    CLI::App* cmd_oracle = app.add_subcommand("oracle", "brute-force optimum");
    cmd_oracle->add_option("--input", oracle_args.input, "sample matrix path")
        ->required();
    cmd_oracle->add_option("--perturb", oracle_args.perturb, "samplewise|featurewise");
    cmd_oracle->add_option("--rho", oracle_args.rho, "perturbation magnitude")
        ->required();
    cmd_oracle->add_option("--k", oracle_args.k, "sparsity")->required();
    cmd_oracle->add_option("--resolution", oracle_args.resolution, "angular step");
    cmd_oracle->callback([&]() { result = run_oracle(oracle_args); });

    PpmArgs ppm_args;
    CLI::App* cmd_ppm = app.add_subcommand("ppm", "projected power method");
    cmd_ppm->add_option("--input", ppm_args.input, "sample matrix path")->required();
    cmd_ppm->add_option("--rho", ppm_args.rho, "perturbation magnitude")->required();
    cmd_ppm->add_option("--k", ppm_args.k, "sparsity")->required();
    cmd_ppm->add_option("--init", ppm_args.init, "spca|random");
    cmd_ppm->add_option("--max-iter", ppm_args.max_iter, "iteration budget");
    cmd_ppm->add_option("--tol", ppm_args.tol, "movement tolerance");
    cmd_ppm->add_option("--seed", ppm_args.seed, "seed for random init");
    cmd_ppm->callback([&]() { result = run_ppm(ppm_args); });

    ThresholdArgs th_args;
    CLI::App* cmd_th = app.add_subcommand("thresholds", "closed-form stage thresholds");
    cmd_th->add_option("--lambda", th_args.lambda, "spike eigengap")->required();
    cmd_th->add_option("--n", th_args.n, "sample count")->required();
    cmd_th->add_option("--k", th_args.k, "sparsity (recovery form)");
    cmd_th->add_option("--delta", th_args.delta, "alignment defect (recovery form)");
    cmd_th->add_option("--c", th_args.c, "strong fraction (stage form)");
    cmd_th->add_option("--k1", th_args.k1, "strong support size (stage form)");
    cmd_th->add_option("--k2", th_args.k2, "weak support size (stage form)");
    cmd_th->callback([&]() { result = run_thresholds(th_args); });

    std::string exp_config, exp_out;
    CLI::App* cmd_exp = app.add_subcommand("experiment", "metric sweep to CSV");
    cmd_exp->add_option("--config", exp_config, "config file path")->required();
    cmd_exp->add_option("--out", exp_out, "CSV output path")->required();
    cmd_exp->callback([&]() {
        rspca::ExperimentConfig cfg = rspca::load_experiment_config(exp_config);
        rspca::write_experiment_csv(cfg, exp_out);
        std::printf("wrote %s\n", exp_out.c_str());
        result = kExitOk;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return result;
}
