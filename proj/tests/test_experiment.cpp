#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rspca/experiment.hpp"
#include "rspca/stats.hpp"

using namespace rspca;

namespace {

KSparseVector unit_sparse(std::size_t d, std::vector<std::size_t> support,
                          std::vector<double> raw) {
    double s = 0.0;
    for (double x : raw) s += x * x;
    s = std::sqrt(s);
    KSparseVector v;
    v.d = d;
    v.support = std::move(support);
    for (double x : raw) v.values.push_back(x / s);
    return v;
}

std::size_t count_lines(const std::string& text) {
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    return lines;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config grammar: comments, arrays, canonical method order") {
    const std::string text =
        "# sweep description\n"
        "d = 30\n"
        "n = 60\n"
        "k = 2\n"
        "lambda = 2.5\n"
        "truth = strongweak\n"
        "c = 0.75\n"
        "k1 = 1\n"
        "k2 = 1\n"
        "rho_bar_grid = 0, 0.5, 1.0\n"
        "d_bar = 6\n"
        "N = 2\n"
        "r = 1\n"
        "trials = 3\n"
        "seed_base = 11\n"
        "methods = PPM, MIP, spca\n"  // parsed order is irrelevant
        "time_limit_s = 0\n";
    const ExperimentConfig cfg = parse_experiment_config(text);
    CHECK(cfg.d == 30);
    CHECK(cfg.n == 60);
    CHECK(cfg.k == 2);
    CHECK(cfg.lambda == 2.5);
    CHECK(cfg.truth_mode == TruthMode::StrongWeak);
    CHECK(cfg.c == 0.75);
    CHECK(cfg.rho_bar_grid == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(cfg.d_bar == 6);
    CHECK(cfg.trials == 3);
    CHECK(cfg.seed_base == 11);
    REQUIRE(cfg.methods.size() == 3);
    CHECK(cfg.methods[0] == ExperimentMethod::Mip);   // canonical order restored
    CHECK(cfg.methods[1] == ExperimentMethod::Spca);
    CHECK(cfg.methods[2] == ExperimentMethod::Ppm);
}

TEST_CASE("config grammar: rejects junk") {
    CHECK_THROWS_AS(parse_experiment_config("unknown_key = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("d = twelve\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("methods = gurobi\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("d = 5\nd_bar = 10\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("trials = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("rho_bar_grid = \n"), std::invalid_argument);
}

TEST_CASE("metric fragments: identity, partial overlap, gap sentinel") {
    const KSparseVector star = unit_sparse(10, {1, 2, 3}, {1.0, 1.0, 1.0});
    const MetricsFragment identity = compute_metrics(star, star, nullptr, 1.0, 1.1);
    CHECK(identity.ang == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(identity.rate_supp == doctest::Approx(1.0));
    CHECK(identity.gap == doctest::Approx(0.1).epsilon(1e-12));

    const KSparseVector hat = unit_sparse(10, {1, 2, 4}, {1.0, 1.0, 1.0});
    const MetricsFragment partial = compute_metrics(hat, star, nullptr, 1.0, 1.1);
    CHECK(partial.rate_supp == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(partial.ang == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(partial.restricted_defined);

    const MetricsFragment undefined = compute_metrics(hat, star, nullptr, 0.0, 1.0);
    CHECK(std::isinf(undefined.gap));
}

TEST_CASE("metric fragments: restricted angles and rates") {
    StrongWeakSpec sw;
    sw.c = 0.8;
    sw.k1 = 1;
    sw.k2 = 2;
    const KSparseVector star = build_strong_weak_truth(sw, 8);  // support {0,1,2}
    // Candidate matching the strong entry, orthogonal on the weak block.
    const KSparseVector hat = unit_sparse(8, {0, 4, 5}, {1.0, 0.3, 0.3});
    const MetricsFragment frag = compute_metrics(hat, star, &sw, 0.5, 0.6);
    CHECK(frag.restricted_defined);
    CHECK(frag.ang_s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(frag.ang_w == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(frag.rate_s == doctest::Approx(1.0));
    CHECK(frag.rate_w == doctest::Approx(0.0));
    CHECK(frag.rate_supp == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tiny sweep: row layout, dominance, and byte determinism") {
    ExperimentConfig cfg;
    cfg.d = 12;
    cfg.n = 40;
    cfg.k = 2;
    cfg.lambda = 2.0;
    cfg.d_bar = 5;
    cfg.N = 2;
    cfg.r = 1;
    cfg.trials = 2;
    cfg.seed_base = 3;
    cfg.rho_bar_grid = {0.0, 0.4};
    cfg.time_limit_s = 0.0;

    const std::vector<MetricsRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 2 * 2 * 5);  // trials x grid x (4 methods + best)

    for (std::size_t cell = 0; cell < 4; ++cell) {
        const MetricsRow* mip = &rows[cell * 5];
        CHECK(mip->method == "MIP");
        CHECK(rows[cell * 5 + 1].method == "MIP-r");
        CHECK(rows[cell * 5 + 2].method == "spca");
        CHECK(rows[cell * 5 + 3].method == "PPM");
        const MetricsRow& best = rows[cell * 5 + 4];
        CHECK(best.method == "best");
        for (std::size_t i = 0; i < 4; ++i) {
            const MetricsRow& row = rows[cell * 5 + i];
            CHECK(best.objective >= row.objective - 1e-15);
            CHECK(row.ub >= row.lb - 1e-9);
            // The vanilla sparse-PCA value bounds the robust value from above,
            // so the heuristic rows' ub applies to the solver rows' lb too.
            CHECK(rows[cell * 5 + 2].ub >= mip->lb - 1e-9);
        }
        CHECK(best.status != "");
    }

    const std::string csv_a = metrics_to_csv(rows);
    const std::string csv_b = metrics_to_csv(run_experiment(cfg));
    CHECK(csv_a == csv_b);
    CHECK(csv_a.substr(0, csv_a.find('\n')) ==
          "trial,seed,rho_bar,rho,method,objective,lb,ub,gap,ang,ang_s,ang_w,"
          "rate_supp,rate_s,rate_w,nodes,wall_ms,status");
    CHECK(count_lines(csv_a) == rows.size() + 1);
    CHECK(csv_a.find("\r") == std::string::npos);
}

TEST_CASE("single-method sweep emits one row per cell") {
    ExperimentConfig cfg;
    cfg.d = 10;
    cfg.n = 30;
    cfg.k = 2;
    cfg.lambda = 3.0;
    cfg.d_bar = 4;
    cfg.N = 2;
    cfg.r = 1;
    cfg.trials = 1;
    cfg.rho_bar_grid = {0.0};
    cfg.methods = {ExperimentMethod::Ppm};
    const std::vector<MetricsRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == "PPM");
    CHECK(rows[0].metrics.ang >= 0.9);  // easy spiked instance
}

TEST_CASE("rho reconstruction from the normalized grid") {
    ExperimentConfig cfg;
    cfg.d = 10;
    cfg.n = 90;
    cfg.k = 2;
    cfg.lambda = 2.0;
    cfg.d_bar = 4;
    cfg.N = 2;
    cfg.r = 1;
    cfg.trials = 1;
    cfg.rho_bar_grid = {0.5};
    cfg.methods = {ExperimentMethod::Spca};
    const std::vector<MetricsRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].rho_bar == doctest::Approx(0.5));
    CHECK(rows[0].rho == doctest::Approx(0.5 * std::sqrt(90.0 / 2.0)).epsilon(1e-12));
}

}  // TEST_SUITE
