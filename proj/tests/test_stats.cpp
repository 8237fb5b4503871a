#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rspca/heuristics.hpp"
#include "rspca/linalg.hpp"
#include "rspca/rng.hpp"
#include "rspca/stats.hpp"

using namespace rspca;

namespace {

// Independent quadrature oracle for the truncated variance: adaptive Simpson
// on [rho, rho + 12*sigma] (the tail beyond is below 1e-25 of the mass).
double simpson(const std::function<double(double)>& f, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = simpson(f, a, m);
    const double right = simpson(f, m, b);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1);
}

double h_quadrature(double sigma, double rho) {
    auto integrand = [sigma, rho](double x) {
        const double z = x / sigma;
        const double density = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
        return (x - rho) * (x - rho) * density;
    };
    const double hi = rho + 12.0 * sigma;
    return adaptive_simpson(integrand, rho, hi, simpson(integrand, rho, hi), 1e-13, 40);
}

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

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("spiked sampling is deterministic with the planted correlation") {
    SpikedModel model;
    model.d = 12;
    model.lambda = 3.0;
    model.v_star = unit_sparse(12, {2, 5, 9}, {1.0, 1.0, 1.0});

    const SampleMatrix a = sample_spiked(model, 50, 7);
    const SampleMatrix b = sample_spiked(model, 50, 7);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
    const SampleMatrix c = sample_spiked(model, 50, 8);
    CHECK(c.data != a.data);

    // With many samples the planted direction carries variance 1 + lambda.
    const SampleMatrix big = sample_spiked(model, 6000, 3);
    const Covariance S = covariance_from_samples(big);
    CHECK(quadratic_form(S, model.v_star) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("pure-noise sampling has unit variance") {
    SpikedModel model;
    model.d = 4;
    model.lambda = 0.0;
    model.v_star = unit_sparse(4, {0}, {1.0});
    const SampleMatrix X = sample_spiked(model, 8000, 5);
    const Covariance S = covariance_from_samples(X);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(S.at(j, j) == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("strong/weak truth construction") {
    StrongWeakSpec spec;
    spec.c = 0.8;
    spec.k1 = 1;
    spec.k2 = 4;
    const KSparseVector v = build_strong_weak_truth(spec, 15);
    REQUIRE(v.support == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(v.values[0] == doctest::Approx(std::sqrt(0.8)).epsilon(1e-15));
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(v.values[i] == doctest::Approx(std::sqrt(0.05)).epsilon(1e-15));
    CHECK(v.norm2() == doctest::Approx(1.0).epsilon(1e-14));

    StrongWeakSpec bad = spec;
    bad.c = 0.5;  // boundary excluded
    CHECK_THROWS_AS(build_strong_weak_truth(bad, 15), std::invalid_argument);
    StrongWeakSpec overlap = spec;
    overlap.S1 = {0};
    overlap.S2 = {0, 1, 2, 3};
    CHECK_THROWS_AS(build_strong_weak_truth(overlap, 15), std::invalid_argument);
}

TEST_CASE("exact spiked covariance") {
    const KSparseVector v = unit_sparse(5, {1, 3}, {3.0, 4.0});
    const Covariance S = spiked_covariance_exact(2.0, v);
    CHECK(S.at(0, 0) == doctest::Approx(1.0));
    CHECK(S.at(1, 1) == doctest::Approx(1.0 + 2.0 * 0.36).epsilon(1e-14));
    CHECK(S.at(1, 3) == doctest::Approx(2.0 * 0.6 * 0.8).epsilon(1e-14));
    CHECK(S.at(2, 4) == 0.0);
}

TEST_CASE("expected norm factor: pinned values, growth, and tight bounds") {
    CHECK(expected_norm_factor(1) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    CHECK(expected_norm_factor(2) == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-12));
    double prev = 0.0;
    for (std::size_t n = 1; n <= 200; ++n) {
        const double mu = expected_norm_factor(n);
        CHECK(mu > prev);
        prev = mu;
    }
    for (std::size_t n : {std::size_t(2), std::size_t(10), std::size_t(1000),
                          std::size_t(1000000)}) {
        const double ratio = expected_norm_factor(n) / std::sqrt(double(n));
        CHECK(ratio > std::sqrt(1.0 - 1.0 / (2.0 * double(n))));
        CHECK(ratio < 1.0);
    }
}

TEST_CASE("truncated variance: pinned value, quadrature, zero budget") {
    CHECK(truncated_variance_h(1.0, 1.0) ==
          doctest::Approx(0.075339783343770753).epsilon(1e-12));
    CHECK(truncated_variance_h(0.5, 2.0) ==
          doctest::Approx(h_quadrature(0.5, 2.0)).epsilon(1e-9));
    for (double sigma : {0.1, 0.7, 1.0, 2.3, 5.0}) {
        CHECK(truncated_variance_h(sigma, 0.0) ==
              doctest::Approx(sigma * sigma / 2.0).epsilon(1e-12));
        for (double rho : {0.5, 1.0, 2.0}) {
            const double closed = truncated_variance_h(sigma, rho);
            const double quad = h_quadrature(sigma, rho);
            CHECK(closed == doctest::Approx(quad).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(truncated_variance_h(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_variance_h(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("truncated variance grows in sigma, matching its derivative") {
    for (double rho : {0.5, 1.0, 2.0}) {
        for (double sigma = 0.1; sigma <= 5.0; sigma += 0.1) {
            const double fd = (truncated_variance_h(sigma + 1e-6, rho) -
                               truncated_variance_h(sigma - 1e-6, rho)) /
                              2e-6;
            const double deriv = truncated_variance_h_derivative(sigma, rho);
            CHECK(deriv > 0.0);
            CHECK(deriv == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("population objective identities") {
    const KSparseVector v = unit_sparse(6, {0, 2}, {1.0, -1.0});
    const Covariance S = spiked_covariance_exact(1.5, unit_sparse(6, {0, 2}, {1.0, 1.0}));
    const std::size_t n = 50;
    for (double rho : {0.0, 0.5, 2.0}) {
        const double pop = population_featurewise_objective(S, v, rho, n);
        const double simp = simplified_population_objective(S, v, rho, n);
        if (rho == 0.0) {
            CHECK(pop == doctest::Approx(quadratic_form(S, v)).epsilon(1e-12));
            CHECK(simp == doctest::Approx(std::sqrt(quadratic_form(S, v))).epsilon(1e-12));
        }
        // pop - simp^2 = 2 (rho/sqrt(n)) sigma_v |v|_1 (1 - mu_n/sqrt(n)) >= 0.
        const double sigma_v = std::sqrt(quadratic_form(S, v));
        const double expected_gap = 2.0 * (rho / std::sqrt(double(n))) * sigma_v *
                                    v.norm1() *
                                    (1.0 - expected_norm_factor(n) / std::sqrt(double(n)));
        CHECK(pop - simp * simp == doctest::Approx(expected_gap).epsilon(1e-10));
        CHECK(pop - simp * simp >= -1e-12);
    }
}

TEST_CASE("recovery threshold: pinned value and scalings") {
    ThresholdQuery q;
    q.delta = 0.1;
    q.lambda = 3.0;
    q.n = 500;
    q.k = 5;
    CHECK(recovery_threshold(q) == doctest::Approx(1.1635076278220096).epsilon(1e-12));
    ThresholdQuery q4 = q;
    q4.n = 2000;
    CHECK(recovery_threshold(q4) == doctest::Approx(2.0 * recovery_threshold(q)).epsilon(1e-12));
    ThresholdQuery tiny = q;
    tiny.delta = 1e-9;
    CHECK(recovery_threshold(tiny) < 1e-6);
}

TEST_CASE("stage thresholds: pinned window") {
    const StageThresholds th = stage_thresholds(3.0, 500, 0.8, 1, 4);
    CHECK(th.robust_lower == doctest::Approx(12.211796661988568).epsilon(1e-12));
    CHECK(th.robust_upper == doctest::Approx(18.870376481178709).epsilon(1e-12));
    CHECK(th.window_nonempty);
}

TEST_CASE("stage classification sweeps through the three regimes in order") {
    CHECK(stage_classify(3.0, 500, 0.8, 1, 4, 0.0) == StageKind::Recovery);
    CHECK(stage_classify(3.0, 500, 0.8, 1, 4, 10.0) == StageKind::Robust);
    CHECK(stage_classify(3.0, 500, 0.8, 1, 4, 1e6) == StageKind::OverlyPerturbed);

    int transitions = 0;
    StageKind prev = stage_classify(3.0, 500, 0.8, 1, 4, 0.0);
    for (double rho = 0.25; rho <= 60.0; rho += 0.25) {
        const StageKind cur = stage_classify(3.0, 500, 0.8, 1, 4, rho);
        if (cur != prev) {
            ++transitions;
            CHECK(static_cast<int>(cur) == static_cast<int>(prev) + 1);  // forward only
            prev = cur;
        }
    }
    CHECK(transitions == 2);
    CHECK(std::string(stage_name(StageKind::Recovery)) == "Recovery");
    CHECK(std::string(stage_name(StageKind::Robust)) == "Robust");
    CHECK(std::string(stage_name(StageKind::OverlyPerturbed)) == "OverlyPerturbed");
}

TEST_CASE("truncated-variance argmax coincides with the vanilla argmax") {
    GaussianStream gauss(404);
    for (int trial = 0; trial < 3; ++trial) {
        const double lambda = 1.0 + 2.0 * trial;
        const KSparseVector star =
            unit_sparse(6, {std::size_t(trial), std::size_t(trial + 2)},
                        {1.0, 0.7 + 0.1 * trial});
        const Covariance S = spiked_covariance_exact(lambda, star);
        const KSparseVector via_h = argmax_truncated_variance(S, 2, 1.0);
        const SparsePcaValue vanilla = sparse_pca_exact(S, 2);
        REQUIRE(via_h.support == vanilla.v.support);
        double cos = 0.0;
        for (std::size_t i = 0; i < via_h.values.size(); ++i)
            cos += via_h.values[i] * vanilla.v.values[i];
        CHECK(std::fabs(cos) >= 1.0 - 1e-6);
    }
}

TEST_CASE("margin-surrogate argmax keeps the planted support") {
    const KSparseVector star = unit_sparse(8, {1, 4, 6}, {1.0, 0.9, 0.8});
    const Covariance S = spiked_covariance_exact(3.0, star);
    const KSparseVector got = argmax_simplified_objective(S, 3, 3.0, 500);
    for (std::size_t idx : got.support) {
        bool inside = false;
        for (std::size_t s : star.support) inside = inside || s == idx;
        CHECK(inside);
    }
}

}  // TEST_SUITE
