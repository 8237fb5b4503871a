#pragma once

// Uniform secant grid over [-1, 1] that over-estimates x^2 by piecewise
// linear chords. A weight group restricted to one segment is equivalent to
// the adjacent-pair condition of an SOS-II group, which is how the solver
// branches; the grid also supplies the per-segment chord bounds used in
// node relaxations.

#include <cstddef>
#include <vector>

namespace rspca {

struct PluGrid {
    int N = 1;                  // segment half-count; 2N segments total
    std::vector<double> knots;  // 2N+1 values l/N for l = -N..N
};

// An SOS-II group restricted to the sub-interval [lo, hi] of [-1, 1], where
// both endpoints are grid knots of the owning model (or midpoints introduced
// by interval bisection during branching).
struct SegmentInterval {
    double lo = -1.0;
    double hi = 1.0;
};

// Builds the uniform grid with knots l/N. Throws std::invalid_argument for
// N < 1.
PluGrid build_grid(int N);

// Secant of x^2 through (a, a^2) and (b, b^2) evaluated at g:
// (a+b)g - ab. Requires a < b and g in [a, b]; satisfies
// g^2 <= chord <= g^2 + (b-a)^2/4.
double segment_chord(double a, double b, double g);

// Worst-case over-estimation of the unit grid: 1/(4N^2), attained at
// segment midpoints.
double approximation_gap(int N);

// Index l of the grid segment [knots[l], knots[l+1]] containing g (clamped
// to [-1, 1]); on interior knots the left segment wins.
std::size_t containing_segment(const PluGrid& grid, double g);

// Piecewise-linear upper envelope of x^2 on the grid: the chord of the
// containing segment evaluated at g. Equals x^2 at knots.
double envelope(const PluGrid& grid, double g);

// Largest value of chord(a,b,.) - x^2 over [a, b]: (b-a)^2 / 4.
double chord_gap(double a, double b);

}  // namespace rspca
