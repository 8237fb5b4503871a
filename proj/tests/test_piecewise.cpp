#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rspca/piecewise.hpp"

using namespace rspca;

TEST_SUITE("piecewise") {

TEST_CASE("grid knots are the exact rationals l/N") {
    const PluGrid g = build_grid(4);
    REQUIRE(g.knots.size() == 9);
    for (int l = -4; l <= 4; ++l)
        CHECK(g.knots[static_cast<std::size_t>(l + 4)] == double(l) / 4.0);
    CHECK(g.knots.front() == -1.0);
    CHECK(g.knots.back() == 1.0);
    CHECK(g.knots[4] == 0.0);
    CHECK_THROWS_AS(build_grid(0), std::invalid_argument);
}

TEST_CASE("chord value and gap at a pinned rational point") {
    // Secant of x^2 through 1/3 and 2/3, evaluated at 1/2:
    // (1/3 + 2/3)(1/2) - 2/9 = 5/18; over-estimation 5/18 - 1/4 = 1/36.
    const double c = segment_chord(1.0 / 3.0, 2.0 / 3.0, 0.5);
    CHECK(c == doctest::Approx(5.0 / 18.0).epsilon(1e-15));
    CHECK(c - 0.25 == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
    CHECK(chord_gap(1.0 / 3.0, 2.0 / 3.0) == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
}

TEST_CASE("worst-case grid gap is 1/(4N^2)") {
    CHECK(approximation_gap(1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(approximation_gap(3) == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
    CHECK(approximation_gap(10) == doctest::Approx(1.0 / 400.0).epsilon(1e-15));
}

TEST_CASE("segment lookup clamps and prefers the left segment at knots") {
    const PluGrid g = build_grid(2);  // knots -1, -1/2, 0, 1/2, 1
    CHECK(containing_segment(g, -2.0) == 0);
    CHECK(containing_segment(g, -0.75) == 0);
    CHECK(containing_segment(g, -0.5) == 0);   // interior knot: left wins
    CHECK(containing_segment(g, -0.25) == 1);
    CHECK(containing_segment(g, 0.0) == 1);
    CHECK(containing_segment(g, 0.25) == 2);
    CHECK(containing_segment(g, 1.0) == 3);
    CHECK(containing_segment(g, 7.0) == 3);
}

TEST_CASE("envelope dominates the square within the uniform gap") {
    for (int N : {1, 2, 3, 5, 10}) {
        const PluGrid g = build_grid(N);
        const double cap = approximation_gap(N);
        for (int i = -4000; i <= 4000; ++i) {
            const double x = i / 4000.0;
            const double e = envelope(g, x);
            CHECK(e >= x * x - 1e-15);
            CHECK(e <= x * x + cap + 1e-15);
        }
        // Exact equality at every knot.
        for (double kn : g.knots) CHECK(envelope(g, kn) == doctest::Approx(kn * kn).epsilon(1e-15));
        // Exact worst case at every segment midpoint.
        for (std::size_t s = 0; s + 1 < g.knots.size(); ++s) {
            const double mid = 0.5 * (g.knots[s] + g.knots[s + 1]);
            CHECK(envelope(g, mid) - mid * mid == doctest::Approx(cap).epsilon(1e-12));
        }
    }
}

}  // TEST_SUITE
