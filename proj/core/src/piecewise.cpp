#include "rspca/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rspca {

PluGrid build_grid(int N) {
    if (N < 1) {
        throw std::invalid_argument("build_grid: N must be >= 1");
    }
    PluGrid grid;
    grid.N = N;
    grid.knots.resize(2 * static_cast<std::size_t>(N) + 1);
    for (int l = -N; l <= N; ++l) {
        grid.knots[static_cast<std::size_t>(l + N)] = static_cast<double>(l) / N;
    }
    // Pin the symmetric landmarks exactly (l/N already gives these, but the
    // invariants are on exact values).
    grid.knots.front() = -1.0;
    grid.knots[static_cast<std::size_t>(N)] = 0.0;
    grid.knots.back() = 1.0;
    return grid;
}

double segment_chord(double a, double b, double g) {
    if (!(a < b)) {
        throw std::invalid_argument("segment_chord: need a < b");
    }
    if (g < a - 1e-12 || g > b + 1e-12) {
        throw std::invalid_argument("segment_chord: g outside [a, b]");
    }
    return (a + b) * g - a * b;
}

double approximation_gap(int N) {
    if (N < 1) {
        throw std::invalid_argument("approximation_gap: N must be >= 1");
    }
    return 1.0 / (4.0 * static_cast<double>(N) * static_cast<double>(N));
}

std::size_t containing_segment(const PluGrid& grid, double g) {
    const double x = std::clamp(g, -1.0, 1.0);
    // knots[l] = (l-N)/N, so the containing segment of x is floor((x+1)*N),
    // clamped so that x = 1 maps to the last segment.
    long l = static_cast<long>(std::floor((x + 1.0) * grid.N));
    l = std::clamp<long>(l, 0, 2L * grid.N - 1);
    // On an interior knot the floor lands on the right segment; move to the
    // left one so knots are treated consistently.
    if (l > 0 && x <= grid.knots[static_cast<std::size_t>(l)]) --l;
    return static_cast<std::size_t>(l);
}

double envelope(const PluGrid& grid, double g) {
    const std::size_t l = containing_segment(grid, g);
    return segment_chord(grid.knots[l], grid.knots[l + 1], std::clamp(g, -1.0, 1.0));
}

double chord_gap(double a, double b) {
    const double w = b - a;
    return 0.25 * w * w;
}

}  // namespace rspca
