#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rspca/linalg.hpp"
#include "rspca/rng.hpp"

using namespace rspca;

namespace {

// Two samples in the plane: (1, 0) and (1/2, sqrt(3)/2). Their second-moment
// matrix has eigenvalues 3/4 and 1/4 with leading eigenvector
// (sqrt(3)/2, 1/2).
SampleMatrix two_sample_plane() {
    SampleMatrix X;
    X.n = 2;
    X.d = 2;
    X.data = {1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0};
    return X;
}

Covariance random_symmetric(std::size_t d, std::uint64_t seed) {
    GaussianStream gauss(seed);
    Covariance S;
    S.d = d;
    S.entries.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double x = gauss.next();
            S.at(i, j) = x;
            S.at(j, i) = x;
        }
    }
    return S;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("covariance of the two-sample plane instance") {
    const Covariance S = covariance_from_samples(two_sample_plane());
    CHECK(S.d == 2);
    CHECK(S.at(0, 0) == doctest::Approx(5.0 / 8.0).epsilon(1e-15));
    CHECK(S.at(0, 1) == doctest::Approx(std::sqrt(3.0) / 8.0).epsilon(1e-15));
    CHECK(S.at(1, 0) == S.at(0, 1));
    CHECK(S.at(1, 1) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
}

TEST_CASE("eigendecomposition of the two-sample covariance") {
    const Covariance S = covariance_from_samples(two_sample_plane());
    const EigenBasis eb = symmetric_eigendecomposition(S);
    REQUIRE(eb.lambdas.size() == 2);
    CHECK(eb.lambdas[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(eb.lambdas[1] == doctest::Approx(0.25).epsilon(1e-12));
    const Vector top = eb.eigenvector(0);
    CHECK(top[0] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(top[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("eigendecomposition is orthonormal and reconstructs S") {
    const Covariance S = random_symmetric(8, 42);
    const EigenBasis eb = symmetric_eigendecomposition(S);
    REQUIRE(eb.d == 8);
    // Descending order.
    for (std::size_t j = 1; j < 8; ++j) CHECK(eb.lambdas[j - 1] >= eb.lambdas[j] - 1e-12);
    // Columns orthonormal.
    for (std::size_t a = 0; a < 8; ++a) {
        for (std::size_t b = 0; b < 8; ++b) {
            double g = 0.0;
            for (std::size_t i = 0; i < 8; ++i) g += eb.vec(i, a) * eb.vec(i, b);
            CHECK(g == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
        }
    }
    // S v_j = lambda_j v_j.
    for (std::size_t j = 0; j < 8; ++j) {
        const Vector v = eb.eigenvector(j);
        const Vector Sv = multiply(S, v);
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(Sv[i] == doctest::Approx(eb.lambdas[j] * v[i]).epsilon(1e-9));
    }
    // Sign convention: largest-magnitude component positive.
    for (std::size_t j = 0; j < 8; ++j) {
        const Vector v = eb.eigenvector(j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < 8; ++i)
            if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
        CHECK(v[arg] > 0.0);
    }
}

TEST_CASE("eigendecomposition rejects asymmetric input") {
    Covariance S;
    S.d = 2;
    S.entries = {1.0, 0.5, 0.6, 1.0};
    CHECK_THROWS_AS(symmetric_eigendecomposition(S), std::invalid_argument);
}

TEST_CASE("top-k projection keeps largest magnitudes with stable ties") {
    const Vector x = {3.0, -3.0, 1.0, 2.0};
    const KSparseVector v = top_k_sparse_project(x, 2);
    REQUIRE(v.support == std::vector<std::size_t>{0, 1});
    const double s = std::sqrt(18.0);
    CHECK(v.values[0] == doctest::Approx(3.0 / s).epsilon(1e-15));
    CHECK(v.values[1] == doctest::Approx(-3.0 / s).epsilon(1e-15));
    CHECK(v.norm2() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(top_k_sparse_project(Vector{0.0, 0.0}, 1), std::invalid_argument);
}

TEST_CASE("quadratic form matches the dense product") {
    const Covariance S = random_symmetric(6, 7);
    KSparseVector v;
    v.d = 6;
    v.support = {1, 3, 4};
    v.values = {0.6, -0.48, 0.64};
    const double qf = quadratic_form(S, v);
    const Vector dense = v.dense();
    const Vector Sv = multiply(S, dense);
    CHECK(qf == doctest::Approx(dot(dense, Sv)).epsilon(1e-12));
}

TEST_CASE("submatrix and column restriction agree with direct indexing") {
    const Covariance S = random_symmetric(5, 11);
    const std::vector<std::size_t> idx = {0, 2, 4};
    const Covariance Ssub = principal_submatrix(S, idx);
    REQUIRE(Ssub.d == 3);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            CHECK(Ssub.at(a, b) == S.at(idx[a], idx[b]));

    SampleMatrix X;
    X.n = 2;
    X.d = 5;
    X.data = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const SampleMatrix Xsub = restrict_columns(X, idx);
    REQUIRE(Xsub.d == 3);
    REQUIRE(Xsub.n == 2);
    CHECK(Xsub.at(0, 0) == 1);
    CHECK(Xsub.at(0, 1) == 3);
    CHECK(Xsub.at(0, 2) == 5);
    CHECK(Xsub.at(1, 2) == 10);
}

TEST_CASE("centered covariance subtracts column means") {
    SampleMatrix X;
    X.n = 2;
    X.d = 1;
    X.data = {1.0, 3.0};
    const Covariance raw = covariance_from_samples(X, false);
    const Covariance centered = covariance_from_samples(X, true);
    CHECK(raw.at(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(centered.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

}  // TEST_SUITE
