#include "rspca/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "rspca/combinatorics.hpp"
#include "rspca/heuristics.hpp"
#include "rspca/rng.hpp"

namespace rspca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Intervals at or below this width close a node instead of splitting again.
constexpr double kWidthMin = 1e-5;
// Supports enumerable in EnumerateSupports mode.
constexpr std::size_t kMaxEnumeratedSupports = 200000;

double sq(double x) { return x * x; }

// ============================================================================
// Node subproblem assembly
// ============================================================================

// Static data of one node subproblem: the allowed coordinate set A, the
// per-group interval restrictions, the secants of the envelope over those
// intervals, and a certified spectral bound of the covariance restricted
// to A.
struct NodeProblem {
    const MicpModel* m = nullptr;
    std::vector<std::size_t> A;
    std::vector<SegmentInterval> box;
    std::size_t G = 0;

    std::vector<double> U;       // G x |A|, row j is eigenvector j restricted to A
    std::vector<double> unorm2;  // squared norms of the U rows
    std::vector<double> slope, icept, gapmin, cvec;
    double base_affine = 0.0;  // sum_j lambda_j * icept_j
    double lam_next = 0.0;
    double spectral = 0.0;     // certified >= lambda_max of the restricted covariance
    Vector eig_init;           // unit ascent start, length |A|

    std::size_t a() const { return A.size(); }
};

std::vector<std::size_t> allowed_of(const MicpModel& m, const BnbNode& node) {
    if (node.forced_in.size() == m.k) {
        std::vector<std::size_t> fixed = node.forced_in;
        std::sort(fixed.begin(), fixed.end());
        return fixed;
    }
    std::vector<char> out(m.d, 0);
    for (std::size_t i : node.forced_out) {
        if (i < m.d) out[i] = 1;
    }
    std::vector<std::size_t> allowed;
    for (std::size_t i = 0; i < m.d; ++i) {
        if (!out[i]) allowed.push_back(i);
    }
    return allowed;
}

// Returns false when the node's fixings are contradictory (empty subproblem).
bool build_problem(const MicpModel& m, const BnbNode& node, NodeProblem& P) {
    if (node.intervals.size() != m.r) {
        throw std::invalid_argument("node has wrong SOS-II interval count");
    }
    std::vector<std::size_t> fin = node.forced_in;
    std::vector<std::size_t> fout = node.forced_out;
    std::sort(fin.begin(), fin.end());
    std::sort(fout.begin(), fout.end());
    if (fin.size() > m.k) return false;
    for (std::size_t i : fin) {
        if (std::binary_search(fout.begin(), fout.end(), i)) return false;
    }

    P.m = &m;
    P.A = allowed_of(m, node);
    if (P.A.empty()) return false;
    P.G = m.r;
    P.lam_next = m.lambda_next();

    const std::size_t a = P.A.size();
    P.box.resize(P.G);
    P.U.assign(P.G * a, 0.0);
    P.unorm2.assign(P.G, 0.0);
    P.slope.assign(P.G, 0.0);
    P.icept.assign(P.G, 0.0);
    P.gapmin.assign(P.G, 0.0);
    P.cvec.assign(P.G, 0.0);
    P.base_affine = 0.0;

    double min_norm_sq = 0.0;
    for (std::size_t j = 0; j < P.G; ++j) {
        double lo = std::max(-1.0, node.intervals[j].lo);
        double hi = std::min(1.0, node.intervals[j].hi);
        if (lo > hi) return false;
        P.box[j] = {lo, hi};

        double nrm2 = 0.0;
        for (std::size_t t = 0; t < a; ++t) {
            double u = m.eigen.vec(P.A[t], j);
            P.U[j * a + t] = u;
            nrm2 += u * u;
        }
        P.unorm2[j] = nrm2;
        // Reachability: g_j = <u_j, w> is confined to [-|u_j|, |u_j|] over
        // the unit ball, so intervals outside that band are empty.
        double reach = std::sqrt(nrm2);
        if (lo > reach + 1e-12 || hi < -reach - 1e-12) return false;

        double qa = envelope(m.grid, lo);
        double qb = envelope(m.grid, hi);
        double width = hi - lo;
        if (width <= 1e-12) {
            P.slope[j] = 0.0;
            P.icept[j] = std::max(qa, qb);
        } else {
            P.slope[j] = (qb - qa) / width;
            P.icept[j] = qa - P.slope[j] * lo;
        }
        // Largest over-estimation of x^2 by this secant on the interval.
        double vertex = std::clamp(0.5 * P.slope[j], lo, hi);
        double worst = P.slope[j] * vertex + P.icept[j] - vertex * vertex;
        P.gapmin[j] = std::min(approximation_gap(m.N), std::max(0.0, worst));

        const double lam = m.eigen.lambdas[j];
        P.cvec[j] = lam * P.slope[j];
        P.base_affine += lam * P.icept[j];

        double minabs = (lo > 0.0) ? lo : (hi < 0.0 ? -hi : 0.0);
        min_norm_sq += minabs * minabs;
    }
    if (min_norm_sq > 1.0 + 1e-9) return false;  // box forces |g| > 1

    // Certified spectral bound on the restricted covariance. Small blocks
    // get an exact decomposition (which also provides the ascent start);
    // large ones fall back to the global top eigenvalue (interlacing).
    if (a <= 40) {
        Covariance sub = principal_submatrix(m.sigma, P.A);
        EigenBasis basis = symmetric_eigendecomposition(sub);
        P.spectral = std::max(0.0, basis.lambdas[0]);
        P.eig_init = basis.eigenvector(0);
    } else {
        P.spectral = std::max(0.0, m.eigen.lambdas[0]);
        P.eig_init.assign(a, 0.0);
        double nrm = 0.0;
        for (std::size_t t = 0; t < a; ++t) {
            P.eig_init[t] = m.eigen.vec(P.A[t], 0);
            nrm += sq(P.eig_init[t]);
        }
        nrm = std::sqrt(nrm);
        if (nrm > 1e-12) {
            for (double& x : P.eig_init) x /= nrm;
        } else {
            P.eig_init[0] = 1.0;
        }
    }
    return true;
}

// Spectral cap on the reported value scale, valid for every kind: the
// weighted secants exceed the weighted squares by at most the summed secant
// slack, and the weighted squares are capped by the restricted top
// eigenvalue (or by the residual weight when that is larger).
double spectral_cap(const NodeProblem& P) {
    double cap = std::max(P.spectral, P.lam_next);
    for (std::size_t j = 0; j < P.G; ++j) {
        cap += P.m->eigen.lambdas[j] * P.gapmin[j];
    }
    return cap;
}

// ============================================================================
// Exact ball-box maximization of an affine-minus-quadratic in g
// ============================================================================

struct BallBoxResult {
    double value = 0.0;  // certified upper bound (exact when converged)
    Vector g;            // primal point in the box, used for branch scores
};

// max  sum_j c_j g_j - q * sum_j g_j^2   over the box intersected with the
// Euclidean ball of the given radius. Dual form: for any mu >= 0 the value
// is at most sum_j max_box(c_j g - (q+mu) g^2) + mu * radius^2; the clamp
// point attains the inner max, and the multiplier is found by bisection on
// the clamp norm.
BallBoxResult ball_box_qmax(const std::vector<double>& c,
                            const std::vector<SegmentInterval>& box, double q,
                            double radius) {
    const std::size_t G = c.size();
    auto clamp_point = [&](double mu, Vector& g) {
        double nrm2 = 0.0;
        for (std::size_t j = 0; j < G; ++j) {
            double denom = q + mu;
            double gj;
            if (denom <= 0.0) {
                gj = (c[j] >= 0.0) ? box[j].hi : box[j].lo;
            } else {
                gj = std::clamp(c[j] / (2.0 * denom), box[j].lo, box[j].hi);
            }
            g[j] = gj;
            nrm2 += gj * gj;
        }
        return std::sqrt(nrm2);
    };
    auto dual_value = [&](double mu, const Vector& g) {
        double total = mu * radius * radius;
        for (std::size_t j = 0; j < G; ++j) {
            total += c[j] * g[j] - (q + mu) * sq(g[j]);
        }
        return total;
    };

    BallBoxResult res;
    res.g.assign(G, 0.0);
    double nrm = clamp_point(0.0, res.g);
    if (nrm <= radius + 1e-12) {
        res.value = dual_value(0.0, res.g);
        return res;
    }

    double mu_hi = 1e-6;
    Vector g(G, 0.0);
    for (int it = 0; it < 200 && clamp_point(mu_hi, g) > radius; ++it) mu_hi *= 2.0;
    double mu_lo = 0.0;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (mu_lo + mu_hi);
        if (clamp_point(mid, g) > radius) {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }
    clamp_point(mu_hi, res.g);
    res.value = dual_value(mu_hi, res.g);
    return res;
}

// ============================================================================
// Concave node objectives, ascent, and supergradient certificates
// ============================================================================

Vector restricted_row(const MicpModel& m, std::size_t i, const std::vector<std::size_t>& A) {
    Vector r(A.size());
    const double* row = m.X.row(i);
    for (std::size_t t = 0; t < A.size(); ++t) r[t] = row[A[t]];
    return r;
}

Vector apply_U(const NodeProblem& P, const Vector& w) {
    Vector g(P.G, 0.0);
    for (std::size_t j = 0; j < P.G; ++j) {
        double acc = 0.0;
        const double* row = P.U.data() + j * P.a();
        for (std::size_t t = 0; t < P.a(); ++t) acc += row[t] * w[t];
        g[j] = acc;
    }
    return g;
}

void add_Ut(const NodeProblem& P, const Vector& coeff, Vector& out) {
    for (std::size_t j = 0; j < P.G; ++j) {
        const double cj = coeff[j];
        if (cj == 0.0) continue;
        const double* row = P.U.data() + j * P.a();
        for (std::size_t t = 0; t < P.a(); ++t) out[t] += cj * row[t];
    }
}

void project_ball(Vector& w) {
    double nrm = norm2(w);
    if (nrm > 1.0) {
        for (double& x : w) x /= nrm;
    }
}

// One pass of interval corrections: pushes w toward the slab of each group
// whose coupling value escaped its interval. Approximate on purpose; bound
// validity never depends on w being feasible.
void slab_pass(const NodeProblem& P, Vector& w) {
    for (std::size_t j = 0; j < P.G; ++j) {
        if (P.unorm2[j] < 1e-12) continue;
        double gj = 0.0;
        const double* row = P.U.data() + j * P.a();
        for (std::size_t t = 0; t < P.a(); ++t) gj += row[t] * w[t];
        double target = std::clamp(gj, P.box[j].lo, P.box[j].hi);
        if (target != gj) {
            double shift = (target - gj) / P.unorm2[j];
            for (std::size_t t = 0; t < P.a(); ++t) w[t] += shift * row[t];
        }
    }
}

// Linear maximization over the node region {|w| <= 1} cap slabs, bounded
// through multipliers delta: for any delta,
//   max <s, w>  <=  |s - sum_j delta_j u_j|  +  sum_j max(delta_j lo_j, delta_j hi_j).
// Projected subgradient descent on delta tightens the bound; the value at
// every iterate is valid, so the best seen is returned.
double linmax_dual(const NodeProblem& P, const Vector& s, const Vector& delta_init,
                   int iters) {
    const std::size_t G = P.G;
    const std::size_t a = P.a();
    Vector res(a);

    auto eval = [&](const Vector& delta) {
        res = s;
        for (std::size_t j = 0; j < G; ++j) {
            const double dj = delta[j];
            if (dj == 0.0) continue;
            const double* row = P.U.data() + j * a;
            for (std::size_t t = 0; t < a; ++t) res[t] -= dj * row[t];
        }
        double value = norm2(res);
        for (std::size_t j = 0; j < G; ++j) {
            value += std::max(delta[j] * P.box[j].lo, delta[j] * P.box[j].hi);
        }
        return value;
    };

    double cmax = 0.0;
    for (double cj : P.cvec) cmax = std::max(cmax, std::abs(cj));
    const double step0 = 0.3 * (1.0 + cmax);

    Vector best_delta(G, 0.0);
    double best = eval(best_delta);
    {
        double with_init = eval(delta_init);
        if (with_init < best) {
            best = with_init;
            best_delta = delta_init;
        }
    }

    Vector delta = best_delta;
    Vector sub(G);
    for (int it = 0; it < iters; ++it) {
        double value = eval(delta);
        if (value < best) {
            best = value;
            best_delta = delta;
        }
        double rn = norm2(res);
        for (std::size_t j = 0; j < G; ++j) {
            double along = 0.0;
            if (rn > 1e-14) {
                const double* row = P.U.data() + j * a;
                for (std::size_t t = 0; t < a; ++t) along += row[t] * res[t];
                along /= rn;
            }
            double beta;
            if (delta[j] > 0.0) {
                beta = P.box[j].hi;
            } else if (delta[j] < 0.0) {
                beta = P.box[j].lo;
            } else {
                beta = std::clamp(along, P.box[j].lo, P.box[j].hi);
            }
            sub[j] = -along + beta;
        }
        double step = step0 / std::sqrt(static_cast<double>(it + 1));
        for (std::size_t j = 0; j < G; ++j) delta[j] -= step * sub[j];
    }
    double final_value = eval(delta);
    return std::min(best, final_value);
}

// Joint feasibility of the node region {|w| <= 1} cap slabs. Build-time
// checks cover each slab against the ball, but the intersection of all of
// them can still be empty when the slabs outnumber the coordinates. The
// squared-violation minimum over the ball supplies Farkas multipliers: for
// any feasible w and any delta,
//   |sum_j delta_j u_j| + sum_j max(delta_j lo_j, delta_j hi_j)
//     >= <sum_j delta_j u_j, w> - sum_j delta_j <u_j, w>  = 0,
// so a delta with negative value proves the region empty. The signed slab
// violations at the minimizer are exactly such a delta (with value equal to
// minus the residual violation), and the test only trusts the final exact
// evaluation, not the iteration that produced it. On success w holds the
// violation minimizer, a good ascent start.
bool region_empty(const NodeProblem& P, Vector& w) {
    double L = 1e-12;
    for (double u2 : P.unorm2) L += 2.0 * u2;
    project_ball(w);

    Vector r(P.G, 0.0);
    Vector grad(w.size(), 0.0);
    auto violations = [&](double& viol) {
        Vector g = apply_U(P, w);
        viol = 0.0;
        for (std::size_t j = 0; j < P.G; ++j) {
            r[j] = g[j] - std::clamp(g[j], P.box[j].lo, P.box[j].hi);
            viol += sq(r[j]);
        }
    };

    double viol = 0.0;
    for (int it = 0; it < 240; ++it) {
        violations(viol);
        if (viol <= 1e-18) return false;
        std::fill(grad.begin(), grad.end(), 0.0);
        add_Ut(P, r, grad);
        for (std::size_t t = 0; t < w.size(); ++t) w[t] -= (2.0 / L) * grad[t];
        project_ball(w);
    }

    violations(viol);
    if (viol <= 1e-18) return false;
    std::fill(grad.begin(), grad.end(), 0.0);
    add_Ut(P, r, grad);
    double dual = norm2(grad);
    double scale = 1.0;
    for (std::size_t j = 0; j < P.G; ++j) {
        dual += std::max(r[j] * P.box[j].lo, r[j] * P.box[j].hi);
        scale += std::abs(r[j]);
    }
    return dual < -1e-9 * scale;
}

// ---------------------------------------------------------------------------
// Sample-wise pieces
// ---------------------------------------------------------------------------

struct SamplewiseEval {
    double value = 0.0;
    Vector grad;
};

// Node objective: weighted secants + residual-mass term + mean concave loss
// part. Concave in w; the secants are affine extensions, so concavity holds
// on the whole space, not just inside the slabs.
SamplewiseEval samplewise_objective(const NodeProblem& P,
                                    const std::vector<Vector>& rows, const Vector& w,
                                    bool want_grad) {
    const MicpModel& m = *P.m;
    const std::size_t a = P.a();
    SamplewiseEval out;
    Vector g = apply_U(P, w);

    double gsq = 0.0;
    double value = P.base_affine + P.lam_next;
    for (std::size_t j = 0; j < P.G; ++j) {
        value += P.cvec[j] * g[j];
        gsq += sq(g[j]);
    }
    value -= P.lam_next * gsq;

    Vector coeff;
    if (want_grad) {
        out.grad.assign(a, 0.0);
        coeff.assign(P.G, 0.0);
        for (std::size_t j = 0; j < P.G; ++j) {
            coeff[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
        }
        add_Ut(P, coeff, out.grad);
    }

    const double inv_n = 1.0 / static_cast<double>(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        const Vector& row = rows[i];
        double t = 0.0;
        for (std::size_t u = 0; u < a; ++u) t += row[u] * w[u];
        value += inv_n * phi_concave(t, m.rho);
        if (want_grad) {
            double dphi = inv_n * phi_concave_derivative(t, m.rho);
            for (std::size_t u = 0; u < a; ++u) out.grad[u] += dphi * row[u];
        }
    }
    out.value = value;
    return out;
}

// Accelerated projected ascent on the concave node objective. Returns the
// best iterate seen; the certificate is evaluated there.
Vector ascend_samplewise(const NodeProblem& P, const std::vector<Vector>& rows,
                         const Vector& w0, int iters) {
    const double L = 2.0 * (P.spectral + P.lam_next) + 1e-9;
    Vector w = w0;
    project_ball(w);
    Vector y = w;
    Vector w_prev = w;

    double best_value = samplewise_objective(P, rows, w, false).value;
    Vector w_best = w;

    for (int it = 0; it < iters; ++it) {
        SamplewiseEval at_y = samplewise_objective(P, rows, y, true);
        Vector w_new = y;
        for (std::size_t t = 0; t < w_new.size(); ++t) w_new[t] += at_y.grad[t] / L;
        project_ball(w_new);
        slab_pass(P, w_new);
        project_ball(w_new);

        double value = samplewise_objective(P, rows, w_new, false).value;
        if (value > best_value) {
            best_value = value;
            w_best = w_new;
        }
        // Momentum with restart whenever progress stalls.
        double momentum = static_cast<double>(it) / static_cast<double>(it + 3);
        if (value < samplewise_objective(P, rows, w, false).value) momentum = 0.0;
        y = w_new;
        for (std::size_t t = 0; t < y.size(); ++t) {
            y[t] += momentum * (w_new[t] - w_prev[t]);
        }
        w_prev = w;
        w = w_new;
    }
    return w_best;
}

double certify_samplewise(const NodeProblem& P, const std::vector<Vector>& rows,
                          const Vector& w, int dd_iters) {
    SamplewiseEval at_w = samplewise_objective(P, rows, w, true);
    double base = at_w.value - dot(at_w.grad, w);

    Vector g = apply_U(P, w);
    Vector delta_init(P.G);
    for (std::size_t j = 0; j < P.G; ++j) {
        delta_init[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
    }
    return base + linmax_dual(P, at_w.grad, delta_init, dd_iters);
}

// ---------------------------------------------------------------------------
// Feature-wise pieces
// ---------------------------------------------------------------------------

double featurewise_capacity(const NodeProblem& P, const Vector& g) {
    double gsq = 0.0;
    double q = P.base_affine + P.lam_next;
    for (std::size_t j = 0; j < P.G; ++j) {
        q += P.cvec[j] * g[j];
        gsq += sq(g[j]);
    }
    return q - P.lam_next * gsq;
}

// Margin objective on the t scale: sqrt(n * capacity) - rho * |w|_1.
double featurewise_margin(const NodeProblem& P, const Vector& w) {
    Vector g = apply_U(P, w);
    double q = featurewise_capacity(P, g);
    double root = std::sqrt(static_cast<double>(P.m->n) * std::max(0.0, q));
    return root - P.m->rho * norm1(w);
}

Vector ascend_featurewise(const NodeProblem& P, const Vector& w0, int iters) {
    const MicpModel& m = *P.m;
    const double n = static_cast<double>(m.n);
    const double eps = 1e-9;

    Vector w = w0;
    project_ball(w);
    double best_value = featurewise_margin(P, w);
    Vector w_best = w;

    Vector coeff(P.G);
    for (int it = 0; it < iters; ++it) {
        Vector g = apply_U(P, w);
        double q = featurewise_capacity(P, g);
        Vector grad(w.size(), 0.0);
        for (std::size_t j = 0; j < P.G; ++j) {
            coeff[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
        }
        add_Ut(P, coeff, grad);
        if (q > 1e-12) {
            double scale = 0.5 * std::sqrt(n / q);
            for (double& x : grad) x *= scale;
        }
        for (std::size_t t = 0; t < w.size(); ++t) {
            grad[t] -= m.rho * w[t] / std::sqrt(sq(w[t]) + sq(eps));
        }
        double gn = norm2(grad);
        if (gn < 1e-14) break;
        double step = 0.3 / std::sqrt(static_cast<double>(it + 1));
        for (std::size_t t = 0; t < w.size(); ++t) w[t] += step * grad[t] / gn;
        project_ball(w);
        slab_pass(P, w);
        project_ball(w);

        double value = featurewise_margin(P, w);
        if (value > best_value) {
            best_value = value;
            w_best = w;
        }
    }
    return w_best;
}

// Supergradient certificate on the t scale; +infinity when the capacity at
// the ascent point is too small for the square-root chain rule.
double certify_featurewise(const NodeProblem& P, const Vector& w, int dd_iters) {
    const MicpModel& m = *P.m;
    const double n = static_cast<double>(m.n);
    Vector g = apply_U(P, w);
    double q = featurewise_capacity(P, g);
    if (q <= 1e-12) return kInf;

    double root = std::sqrt(n * q);
    Vector coeff(P.G);
    for (std::size_t j = 0; j < P.G; ++j) {
        coeff[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
    }
    Vector s(w.size(), 0.0);
    add_Ut(P, coeff, s);
    const double scale = 0.5 * n / root;
    for (double& x : s) x *= scale;
    for (std::size_t t = 0; t < w.size(); ++t) {
        double sgn = (w[t] > 0.0) ? 1.0 : (w[t] < 0.0 ? -1.0 : 0.0);
        s[t] -= m.rho * sgn;
    }

    double value_at_w = root - m.rho * norm1(w);
    double base = value_at_w - dot(s, w);

    Vector delta_init(P.G);
    for (std::size_t j = 0; j < P.G; ++j) delta_init[j] = scale * coeff[j];
    return base + linmax_dual(P, s, delta_init, dd_iters);
}

// Smooth concave capacity ascent; used when the margin ascent cannot find a
// positive-capacity point to certify from.
Vector ascend_capacity(const NodeProblem& P, const Vector& w0, int iters) {
    const double L = 2.0 * P.lam_next + 1e-6;
    Vector w = w0;
    project_ball(w);
    double best = featurewise_capacity(P, apply_U(P, w));
    Vector w_best = w;
    Vector coeff(P.G);
    for (int it = 0; it < iters; ++it) {
        Vector g = apply_U(P, w);
        for (std::size_t j = 0; j < P.G; ++j) {
            coeff[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
        }
        Vector grad(w.size(), 0.0);
        add_Ut(P, coeff, grad);
        for (std::size_t t = 0; t < w.size(); ++t) w[t] += grad[t] / L;
        project_ball(w);
        slab_pass(P, w);
        project_ball(w);
        double q = featurewise_capacity(P, apply_U(P, w));
        if (q > best) {
            best = q;
            w_best = w;
        }
    }
    return w_best;
}

// Certified upper bound on the capacity over the node region, by the same
// supergradient linearization as the other certificates.
double certify_capacity(const NodeProblem& P, const Vector& w, int dd_iters) {
    Vector g = apply_U(P, w);
    double q = featurewise_capacity(P, g);
    Vector coeff(P.G);
    for (std::size_t j = 0; j < P.G; ++j) {
        coeff[j] = P.cvec[j] - 2.0 * P.lam_next * g[j];
    }
    Vector grad(w.size(), 0.0);
    add_Ut(P, coeff, grad);
    double base = q - dot(grad, w);
    return base + linmax_dual(P, grad, coeff, dd_iters);
}

// Monotone radial-grid bound on the t scale: over each radius cell, the
// capacity is bounded with the larger radius and the l1 penalty credited
// with the smaller one (|v|_1 >= |v|_2 >= |g|_2).
struct GridBound {
    double t_bound = -kInf;
    Vector ghat;
};

GridBound radial_grid_bound(const NodeProblem& P) {
    const MicpModel& m = *P.m;
    const double n = static_cast<double>(m.n);

    double lmin2 = 0.0, lmax2 = 0.0;
    for (std::size_t j = 0; j < P.G; ++j) {
        double lo = P.box[j].lo, hi = P.box[j].hi;
        double minabs = (lo > 0.0) ? lo : (hi < 0.0 ? -hi : 0.0);
        double maxabs = std::max(std::abs(lo), std::abs(hi));
        lmin2 += sq(minabs);
        lmax2 += sq(maxabs);
    }
    double lmin = std::sqrt(std::min(1.0, lmin2));
    double lmax = std::sqrt(std::min(1.0, lmax2));

    GridBound out;
    out.ghat.assign(P.G, 0.0);
    for (int i = 0; i < 100; ++i) {
        double slo = i / 100.0;
        double shi = (i + 1) / 100.0;
        if (shi < lmin - 1e-12 || slo > lmax + 1e-12) continue;
        double slo_eff = std::max(slo, lmin);
        double shi_eff = std::min(shi, lmax);
        BallBoxResult bb = ball_box_qmax(P.cvec, P.box, 0.0, shi_eff);
        double cap = P.base_affine + bb.value + P.lam_next * (1.0 - sq(slo_eff));
        double t_cell = std::sqrt(n * std::max(0.0, cap)) - m.rho * slo_eff;
        if (t_cell > out.t_bound) {
            out.t_bound = t_cell;
            out.ghat = bb.g;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Residual spans: certified per-sample residual ranges over a node region
// ---------------------------------------------------------------------------

// Samples expressed in the eigenbasis: beta[i][j] = <x_i, u_j>. For any v,
// <x_i, v> = sum_j beta[i][j] g_j plus a component outside the basis whose
// magnitude is at most the norm of the out-of-basis part of x_i restricted
// to the support (zero when all d groups are present). Interval arithmetic
// over the node box then encloses every residual the region can produce.
struct SampleSpans {
    std::size_t n = 0, r = 0, d = 0;
    std::vector<double> beta;      // n x r
    std::vector<double> residual;  // n x d out-of-basis parts; empty when r == d
};

SampleSpans make_sample_spans(const MicpModel& m) {
    SampleSpans sp;
    sp.n = m.n;
    sp.r = m.r;
    sp.d = m.d;
    sp.beta.assign(m.n * m.r, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        const double* row = m.X.row(i);
        for (std::size_t j = 0; j < m.r; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m.d; ++c) acc += row[c] * m.eigen.vec(c, j);
            sp.beta[i * m.r + j] = acc;
        }
    }
    if (m.r < m.d) {
        sp.residual.assign(m.n * m.d, 0.0);
        for (std::size_t i = 0; i < m.n; ++i) {
            const double* row = m.X.row(i);
            double* out = sp.residual.data() + i * m.d;
            for (std::size_t c = 0; c < m.d; ++c) out[c] = row[c];
            for (std::size_t j = 0; j < m.r; ++j) {
                const double b = sp.beta[i * m.r + j];
                for (std::size_t c = 0; c < m.d; ++c) out[c] -= b * m.eigen.vec(c, j);
            }
        }
    }
    return sp;
}

// Largest value of the concave clamp part over a residual interval: zero as
// soon as the interval touches the flat region |t| <= rho.
double phi_interval_max(double tlo, double thi, double rho) {
    if (tlo > rho) return -sq(tlo - rho);
    if (thi < -rho) return -sq(-thi - rho);
    return 0.0;
}

// Mean clamp-part bound over the node region, or +infinity on an empty
// intersection of the interval enclosures (which proves the region empty).
double clamp_mass_bound(const NodeProblem& P, const SampleSpans& sp,
                        const std::vector<Vector>& rows, bool& empty) {
    const MicpModel& m = *P.m;
    double mass = 0.0;
    empty = false;
    for (std::size_t i = 0; i < sp.n; ++i) {
        double lo = 0.0, hi = 0.0;
        const double* b = sp.beta.data() + i * sp.r;
        for (std::size_t j = 0; j < P.G; ++j) {
            lo += std::min(b[j] * P.box[j].lo, b[j] * P.box[j].hi);
            hi += std::max(b[j] * P.box[j].lo, b[j] * P.box[j].hi);
        }
        if (!sp.residual.empty()) {
            double t2 = 0.0;
            const double* res = sp.residual.data() + i * sp.d;
            for (std::size_t t = 0; t < P.a(); ++t) t2 += sq(res[P.A[t]]);
            double tail = std::sqrt(t2);
            lo -= tail;
            hi += tail;
        }
        double reach = norm2(rows[i]);
        lo = std::max(lo, -reach);
        hi = std::min(hi, reach);
        if (lo > hi + 1e-9) {
            empty = true;
            return kInf;
        }
        mass += phi_interval_max(lo, hi, m.rho);
    }
    return mass / static_cast<double>(m.n);
}

// ---------------------------------------------------------------------------
// Full node evaluation
// ---------------------------------------------------------------------------

struct NodeEval {
    bool infeasible = false;
    double bound = kInf;  // reported value scale
    Vector vhat;          // compressed ascent point, length |A|
    Vector ghat;          // branch-score argmax, length G
};

NodeEval evaluate_node(const MicpModel& m, const NodeProblem& P,
                       const SampleSpans& sp, const Vector* warm,
                       int ascent_iters, int dd_iters) {
    NodeEval eval;
    Vector w0 = (warm != nullptr && warm->size() == P.a()) ? *warm : P.eig_init;
    slab_pass(P, w0);
    project_ball(w0);
    if (region_empty(P, w0)) {
        eval.infeasible = true;
        return eval;
    }

    double cap = spectral_cap(P);
    if (m.samplewise()) {
        std::vector<Vector> rows(m.n);
        for (std::size_t i = 0; i < m.n; ++i) rows[i] = restricted_row(m, i, P.A);

        BallBoxResult bb = ball_box_qmax(P.cvec, P.box, P.lam_next, 1.0);
        bool span_empty = false;
        double clamp_mass = clamp_mass_bound(P, sp, rows, span_empty);
        if (span_empty) {
            eval.infeasible = true;
            return eval;
        }
        double cheap = P.base_affine + P.lam_next + bb.value + clamp_mass;
        eval.ghat = bb.g;

        eval.vhat = ascend_samplewise(P, rows, w0, ascent_iters);
        double cert = certify_samplewise(P, rows, eval.vhat, dd_iters);
        eval.bound = std::min({cap, cheap, cert});
    } else {
        GridBound grid = radial_grid_bound(P);
        double grid_value = sq(std::max(0.0, grid.t_bound)) / static_cast<double>(m.n);
        eval.ghat = grid.ghat;

        eval.vhat = ascend_featurewise(P, w0, ascent_iters);
        double t_cert = certify_featurewise(P, eval.vhat, dd_iters);
        double cert_value =
            std::isfinite(t_cert) ? sq(std::max(0.0, t_cert)) / static_cast<double>(m.n)
                                  : kInf;
        if (!std::isfinite(t_cert) || cert_value >= grid_value) {
            // The margin ascent either settled where the capacity is
            // nonpositive (no base point for the chain-rule certificate) or
            // produced a useless bound: near-zero capacity makes the
            // chain-rule supergradient blow up. Climb the smooth capacity
            // instead, retry the margin certificate there, and always keep
            // the direct capacity bound (value <= max(0, capacity max),
            // since the l1 credit only lowers the margin).
            Vector wq = ascend_capacity(P, w0, std::min(ascent_iters, 300));
            double t_retry = certify_featurewise(P, wq, dd_iters);
            if (std::isfinite(t_retry)) {
                double retry_value =
                    sq(std::max(0.0, t_retry)) / static_cast<double>(m.n);
                if (!std::isfinite(t_cert)) eval.vhat = wq;
                cert_value = std::min(cert_value, retry_value);
            }
            double qcert = certify_capacity(P, wq, dd_iters);
            cert_value = std::min(cert_value, std::max(0.0, qcert));
        }
        eval.bound = std::min({cap, grid_value, cert_value});
    }
    return eval;
}

// ============================================================================
// Search bookkeeping
// ============================================================================

struct NodeRec {
    BnbNode node;
    long id = 0;
    double bound = kInf;
    bool refined = false;
    Vector vhat;  // compressed warm start, aligned with allowed_of(node)
    Vector ghat;
};

struct NodeOrder {
    bool operator()(const NodeRec& a, const NodeRec& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;  // larger bound first
        return a.id > b.id;                                // then older first
    }
};

bool support_not_fixed(const MicpModel& m, const BnbNode& node) {
    if (node.forced_in.size() >= m.k) return false;
    std::vector<std::size_t> allowed = allowed_of(m, node);
    return allowed.size() > m.k;
}

Vector dense_from_compressed(const MicpModel& m, const std::vector<std::size_t>& A,
                             const Vector& w) {
    Vector dense(m.d, 0.0);
    for (std::size_t t = 0; t < A.size() && t < w.size(); ++t) dense[A[t]] = w[t];
    return dense;
}

// True when the interval strictly contains a grid knot, i.e. it still spans
// more than one linear segment and can be split without leaving the grid.
bool has_interior_knot(const PluGrid& grid, const SegmentInterval& iv) {
    for (double knot : grid.knots) {
        if (knot > iv.lo + 1e-12 && knot < iv.hi - 1e-12) return true;
    }
    return false;
}

// Interval branch selection: the group with the largest secant-vs-square
// discrepancy at ghat among groups that still span more than one segment.
// Splits happen only at grid knots, so once every group sits inside a single
// segment the node is a leaf (its secant relaxation is the exact envelope)
// and the search tree is finite.  Returns false when every interval has
// converged.
bool pick_interval_branch(const PluGrid& grid, const NodeProblem& P,
                          const Vector& ghat, std::size_t& pick) {
    double best_score = -1.0;
    bool found = false;
    double widest = -1.0;
    std::size_t widest_j = 0;
    for (std::size_t j = 0; j < P.G; ++j) {
        double width = P.box[j].hi - P.box[j].lo;
        if (width <= kWidthMin) continue;
        if (!has_interior_knot(grid, P.box[j])) continue;
        double gj = std::clamp(j < ghat.size() ? ghat[j] : 0.0, P.box[j].lo, P.box[j].hi);
        double score = P.slope[j] * gj + P.icept[j] - sq(gj);
        if (width > widest) {
            widest = width;
            widest_j = j;
        }
        if (score > best_score + 1e-15) {
            best_score = score;
            pick = j;
            found = true;
        }
    }
    if (!found) return false;
    if (best_score <= 1e-14) pick = widest_j;  // fall back to the widest interval
    return true;
}

// Split point: the interior grid knot nearest the interval midpoint.  The
// caller only branches intervals that contain one, so the midpoint fallback
// is purely defensive.
double pick_split_point(const PluGrid& grid, const SegmentInterval& iv) {
    double mid = 0.5 * (iv.lo + iv.hi);
    double best_knot = 0.0;
    bool found = false;
    for (double knot : grid.knots) {
        if (knot <= iv.lo + 1e-12 || knot >= iv.hi - 1e-12) continue;
        if (!found || std::abs(knot - mid) < std::abs(best_knot - mid) - 1e-15) {
            best_knot = knot;
            found = true;
        }
    }
    return found ? best_knot : mid;
}

// Binary branch selection: the allowed-but-undecided index whose scaled
// magnitude is most fractional at the ascent point.
std::size_t pick_binary_branch(const MicpModel& m, const BnbNode& node,
                               const Vector& dense_vhat) {
    std::vector<char> in(m.d, 0), out(m.d, 0);
    for (std::size_t i : node.forced_in) in[i] = 1;
    for (std::size_t i : node.forced_out) out[i] = 1;

    double vmax = 0.0;
    for (std::size_t i = 0; i < m.d; ++i) vmax = std::max(vmax, std::abs(dense_vhat[i]));

    std::size_t pick = m.d;
    double best = -1.0;
    for (std::size_t i = 0; i < m.d; ++i) {
        if (in[i] || out[i]) continue;
        if (pick == m.d) pick = i;  // lowest free index as the fallback
        if (vmax <= 1e-14) continue;
        double z = std::abs(dense_vhat[i]) / vmax;
        double frac = std::min(z, 1.0 - z);
        if (frac > best + 1e-15) {
            best = frac;
            pick = i;
        }
    }
    return pick;
}

}  // namespace

// ============================================================================
// Public API
// ============================================================================

const char* status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::GapReached: return "GapReached";
        case SolveStatus::NodeLimit: return "NodeLimit";
        case SolveStatus::TimeLimit: return "TimeLimit";
        case SolveStatus::AllPerturbed: return "AllPerturbed";
    }
    return "unknown";
}

RoundResult round_incumbent(const MicpModel& m, const Vector& relaxed_v) {
    RoundResult out;
    bool any = false;
    for (double x : relaxed_v) {
        if (x != 0.0) {
            any = true;
            break;
        }
    }
    if (!any) {
        out.v.d = m.d;
        out.value = -kInf;
        out.feasible = false;
        return out;
    }
    out.v = top_k_sparse_project(relaxed_v, m.k);
    if (m.samplewise()) {
        out.value = objective_samplewise(m.X, out.v, m.rho);
        out.feasible = true;
    } else {
        FeaturewiseValue fv = objective_featurewise(m.X, out.v, m.rho);
        out.value = fv.value;
        out.feasible = fv.feasible;
    }
    return out;
}

double relax_bound(const MicpModel& m, const BnbNode& node, int ascent_iters) {
    NodeProblem P;
    if (!build_problem(m, node, P)) return -kInf;
    SampleSpans sp = make_sample_spans(m);
    NodeEval eval = evaluate_node(m, P, sp, nullptr, ascent_iters,
                                  std::max(60, ascent_iters / 4));
    if (eval.infeasible) return -kInf;
    return eval.bound;
}

SolveReport solve(const MicpModel& m, const SolverOptions& opts,
                  const KSparseVector* warm) {
    using Clock = std::chrono::steady_clock;
    const auto t_start = Clock::now();
    auto elapsed_s = [&]() {
        return std::chrono::duration<double>(Clock::now() - t_start).count();
    };

    if (m.d == 0 || m.k == 0 || m.k > m.d) {
        throw std::invalid_argument("solve: malformed model dimensions");
    }
    if (opts.mode == SolveMode::EnumerateSupports &&
        binomial_capped(m.d, m.k, kMaxEnumeratedSupports) >= kMaxEnumeratedSupports) {
        throw std::invalid_argument(
            "solve: too many supports to enumerate; use BranchBinaries mode");
    }

    SolveReport report;
    report.lb = -kInf;
    bool found_feasible = false;

    auto offer_incumbent = [&](const Vector& dense) {
        RoundResult rr = round_incumbent(m, dense);
        if (!std::isfinite(rr.value)) return;
        if (rr.feasible) found_feasible = true;
        if (rr.value > report.lb ||
            (!report.incumbent_feasible && rr.feasible && rr.value >= report.lb)) {
            report.lb = rr.value;
            report.incumbent = rr.v;
            report.incumbent_feasible = rr.feasible;
        }
    };

    // Warm start: caller vector, the vanilla sparse-PCA heuristic, and the
    // projected power method all compete; the exact objective arbitrates.
    if (warm != nullptr && !warm->support.empty()) offer_incumbent(warm->dense());
    {
        KSparseVector tp = truncated_power(m.sigma, m.k);
        offer_incumbent(tp.dense());
        PpmOptions popts;
        popts.seed = opts.seed;
        PpmResult pr = ppm(m.X, m.k, m.rho, popts);
        offer_incumbent(pr.v.dense());
    }
    if (!std::isfinite(report.lb)) {
        Vector e0(m.d, 0.0);
        e0[0] = 1.0;
        offer_incumbent(e0);
    }

    const int interior_iters = std::max(60, opts.relax_iters / 6);
    const double seg_width = 1.0 / static_cast<double>(m.N);
    const SampleSpans spans = make_sample_spans(m);

    std::priority_queue<NodeRec, std::vector<NodeRec>, NodeOrder> heap;
    long next_id = 0;
    long nodes = 0;
    double closed_max = -kInf;
    // Bounds of nodes discarded by gap pruning.  They cap the model optimum
    // just like closed leaves do, so they must survive into the final ub;
    // otherwise pruning could silently shave value off the certificate.
    double pruned_max = -kInf;
    auto prune_level = [&]() {
        return report.lb + std::max(opts.abs_gap, opts.rel_gap * std::max(report.lb, 0.0));
    };

    auto push_quick = [&](BnbNode&& node, const Vector& vhat_warm) {
        NodeProblem P;
        if (!build_problem(m, node, P)) return;
        double quick = std::min(node.parent_bound, spectral_cap(P));
        if (quick <= prune_level()) {
            pruned_max = std::max(pruned_max, quick);
            return;
        }
        NodeRec rec;
        rec.node = std::move(node);
        rec.id = next_id++;
        rec.bound = quick;
        rec.refined = false;
        rec.vhat = vhat_warm;
        heap.push(std::move(rec));
    };

    // Roots.
    std::vector<SegmentInterval> full_intervals(m.r, SegmentInterval{-1.0, 1.0});
    if (opts.mode == SolveMode::EnumerateSupports) {
        std::vector<std::size_t> support = first_combination(m.k);
        do {
            BnbNode node;
            node.forced_in = support;
            for (std::size_t i = 0, t = 0; i < m.d; ++i) {
                if (t < support.size() && support[t] == i) {
                    ++t;
                } else {
                    node.forced_out.push_back(i);
                }
            }
            node.intervals = full_intervals;
            node.parent_bound = kInf;
            push_quick(std::move(node), Vector());
        } while (next_combination(support, m.d));
    } else {
        BnbNode root;
        root.intervals = full_intervals;
        root.parent_bound = kInf;
        push_quick(std::move(root), Vector());
    }

    enum class Stop { Exhausted, Gap, Nodes, Time };
    Stop stop = Stop::Exhausted;
    double open_bound = -kInf;

    while (!heap.empty()) {
        NodeRec top = heap.top();
        if (top.bound <= prune_level()) {
            open_bound = top.bound;
            stop = Stop::Gap;
            break;
        }
        if (nodes >= opts.node_limit) {
            open_bound = top.bound;
            stop = Stop::Nodes;
            break;
        }
        if (opts.timing && elapsed_s() > opts.time_limit_s) {
            open_bound = top.bound;
            stop = Stop::Time;
            break;
        }
        heap.pop();

        NodeProblem P;
        if (!build_problem(m, top.node, P)) continue;

        if (!top.refined) {
            bool leafish = true;
            for (const auto& iv : P.box) {
                if (iv.hi - iv.lo > seg_width + 1e-12) {
                    leafish = false;
                    break;
                }
            }
            bool is_root = !std::isfinite(top.node.parent_bound);
            int budget = (leafish || is_root) ? opts.relax_iters : interior_iters;
            NodeEval eval =
                evaluate_node(m, P, spans, top.vhat.empty() ? nullptr : &top.vhat,
                              budget, std::max(60, budget / 4));
            ++nodes;
            if (eval.infeasible) continue;  // certified empty region
            offer_incumbent(dense_from_compressed(m, P.A, eval.vhat));
            double refined_bound = std::min(top.bound, eval.bound);
            if (refined_bound <= prune_level()) {
                pruned_max = std::max(pruned_max, refined_bound);
                continue;
            }
            top.bound = refined_bound;
            top.refined = true;
            top.vhat = eval.vhat;
            top.ghat = eval.ghat;
            heap.push(std::move(top));
            continue;
        }

        // Branch.
        if (opts.mode == SolveMode::BranchBinaries && support_not_fixed(m, top.node)) {
            Vector dense = dense_from_compressed(m, P.A, top.vhat);
            std::size_t i = pick_binary_branch(m, top.node, dense);
            if (i < m.d) {
                for (int side = 0; side < 2; ++side) {
                    BnbNode child = top.node;
                    if (side == 0) {
                        child.forced_in.push_back(i);
                    } else {
                        child.forced_out.push_back(i);
                    }
                    child.parent_bound = top.bound;
                    push_quick(std::move(child), Vector());
                }
                continue;
            }
            // No free index: fall through to interval branching.
        }

        std::size_t j = 0;
        if (!pick_interval_branch(m.grid, P, top.ghat, j)) {
            // This bound flows straight into the final certificate, so polish
            // it with escalating ascent budgets until the improvement stalls.
            // (The subgradient ascent used for feature-wise nodes converges
            // slowly; the default budget can leave visible certificate slack.)
            double bound = top.bound;
            int budget = 4 * std::max(opts.relax_iters, 50);
            for (int round = 0; round < 2; ++round) {
                if (opts.timing && elapsed_s() > opts.time_limit_s) break;
                NodeEval extra = evaluate_node(
                    m, P, spans, top.vhat.empty() ? nullptr : &top.vhat, budget,
                    std::max(60, budget / 4));
                if (extra.infeasible) {
                    bound = -kInf;
                    break;
                }
                offer_incumbent(dense_from_compressed(m, P.A, extra.vhat));
                double improved = std::min(bound, extra.bound);
                bool stalled =
                    bound - improved <= std::max(1e-9, 1e-7 * std::abs(bound));
                bound = improved;
                top.vhat = extra.vhat;
                if (stalled) break;
                budget *= 4;
            }
            if (bound <= prune_level()) {
                pruned_max = std::max(pruned_max, bound);
            } else {
                closed_max = std::max(closed_max, bound);
            }
            continue;
        }
        double split = pick_split_point(m.grid, P.box[j]);
        for (int side = 0; side < 2; ++side) {
            BnbNode child = top.node;
            child.intervals[j] = (side == 0) ? SegmentInterval{P.box[j].lo, split}
                                             : SegmentInterval{split, P.box[j].hi};
            child.parent_bound = top.bound;
            push_quick(std::move(child), top.vhat);
        }
    }

    // Finalize.
    if (stop == Stop::Exhausted && !heap.empty()) open_bound = heap.top().bound;
    double ub = std::max({report.lb, closed_max, pruned_max});
    if (stop != Stop::Exhausted) ub = std::max(ub, open_bound);
    report.ub = ub;
    report.nodes = nodes;
    report.gap = (report.ub - report.lb) / std::max(report.lb, 1e-12);

    switch (stop) {
        case Stop::Nodes: report.status = SolveStatus::NodeLimit; break;
        case Stop::Time: report.status = SolveStatus::TimeLimit; break;
        default: {
            if (!m.samplewise() && !found_feasible) {
                report.status = SolveStatus::AllPerturbed;
            } else if (report.ub - report.lb <= opts.abs_gap + 1e-12) {
                report.status = SolveStatus::Optimal;
            } else {
                report.status = SolveStatus::GapReached;
            }
            break;
        }
    }

    if (m.rank_reduced()) {
        Vector dense = report.incumbent.dense();
        double mass = 0.0;
        for (std::size_t j = 0; j < m.r; ++j) {
            mass += sq(dot(m.eigen.eigenvector(j), dense));
        }
        report.gamma_hat = std::max(0.0, 1.0 - mass);
    }

    report.wall_ms =
        opts.timing
            ? static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                    Clock::now() - t_start)
                                    .count())
            : 0;
    return report;
}

std::string solve_report_to_json(const MicpModel& m, const SolveReport& report) {
    nlohmann::ordered_json j;
    j["kind"] = model_kind_name(m.kind);
    j["d"] = m.d;
    j["n"] = m.n;
    j["k"] = m.k;
    j["N"] = m.N;
    j["r"] = m.rank_reduced() ? m.r : 0;
    j["rho"] = m.rho;
    j["lb"] = report.lb;
    j["ub"] = report.ub;
    j["gap"] = report.gap;
    j["nodes"] = report.nodes;
    j["wall_ms"] = report.wall_ms;
    j["status"] = status_name(report.status);
    j["incumbent"] = {{"support", report.incumbent.support},
                      {"values", report.incumbent.values}};
    if (report.gamma_hat.has_value()) {
        j["gamma_hat"] = *report.gamma_hat;
    }
    return j.dump(2);
}

// ============================================================================
// Brute-force oracle
// ============================================================================

namespace {

// Exact objective of a direction expressed on a fixed support, using
// pre-restricted columns. coords need not be normalized; it is scaled to
// unit norm first.
double oracle_value(const SampleMatrix& X, const std::vector<std::size_t>& support,
                    double rho, UncertaintyKind kind, const Vector& coords) {
    double nrm = norm2(coords);
    if (nrm == 0.0) return -kInf;
    const std::size_t s = support.size();
    double value = 0.0;
    if (kind == UncertaintyKind::SampleWise) {
        for (std::size_t i = 0; i < X.n; ++i) {
            double t = 0.0;
            const double* row = X.row(i);
            for (std::size_t u = 0; u < s; ++u) t += row[support[u]] * coords[u] / nrm;
            value += loss_samplewise_unit(t, rho);
        }
        return value / static_cast<double>(X.n);
    }
    double xv2 = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) {
        double t = 0.0;
        const double* row = X.row(i);
        for (std::size_t u = 0; u < s; ++u) t += row[support[u]] * coords[u] / nrm;
        xv2 += t * t;
    }
    double l1 = 0.0;
    for (std::size_t u = 0; u < s; ++u) l1 += std::abs(coords[u] / nrm);
    double margin = std::sqrt(xv2) - rho * l1;
    if (margin < 0.0) return 0.0;
    return margin * margin / static_cast<double>(X.n);
}

// Projected-gradient polish on the unit sphere of the support, with step
// halving; stops at 1e-10 tangent-gradient stationarity.
void polish_on_sphere(const SampleMatrix& X, const std::vector<std::size_t>& support,
                      double rho, UncertaintyKind kind, Vector& coords, double& value) {
    const std::size_t s = support.size();
    double nrm = norm2(coords);
    if (nrm == 0.0) return;
    for (double& c : coords) c /= nrm;
    value = oracle_value(X, support, rho, kind, coords);

    double step = 0.2;
    for (int it = 0; it < 2000 && step > 1e-14; ++it) {
        // Gradient of the exact objective at unit coords.
        Vector grad(s, 0.0);
        if (kind == UncertaintyKind::SampleWise) {
            for (std::size_t i = 0; i < X.n; ++i) {
                double t = 0.0;
                const double* row = X.row(i);
                for (std::size_t u = 0; u < s; ++u) t += row[support[u]] * coords[u];
                double dl = 0.0;
                if (t > rho) {
                    dl = 2.0 * (t - rho);
                } else if (t < -rho) {
                    dl = 2.0 * (t + rho);
                }
                dl /= static_cast<double>(X.n);
                for (std::size_t u = 0; u < s; ++u) grad[u] += dl * row[support[u]];
            }
        } else {
            double xv2 = 0.0;
            Vector xtxv(s, 0.0);
            for (std::size_t i = 0; i < X.n; ++i) {
                double t = 0.0;
                const double* row = X.row(i);
                for (std::size_t u = 0; u < s; ++u) t += row[support[u]] * coords[u];
                xv2 += t * t;
                for (std::size_t u = 0; u < s; ++u) xtxv[u] += t * row[support[u]];
            }
            double xv = std::sqrt(xv2);
            double l1 = norm1(coords);
            double margin = xv - rho * l1;
            if (margin > 0.0 && xv > 1e-14) {
                for (std::size_t u = 0; u < s; ++u) {
                    double sgn = (coords[u] > 0.0) ? 1.0 : (coords[u] < 0.0 ? -1.0 : 0.0);
                    grad[u] = 2.0 * margin / static_cast<double>(X.n) *
                              (xtxv[u] / xv - rho * sgn);
                }
            }
        }
        double along = dot(grad, coords);
        for (std::size_t u = 0; u < s; ++u) grad[u] -= along * coords[u];
        if (norm2(grad) <= 1e-10) break;

        Vector trial(s);
        for (std::size_t u = 0; u < s; ++u) trial[u] = coords[u] + step * grad[u];
        double tn = norm2(trial);
        for (double& c : trial) c /= tn;
        double trial_value = oracle_value(X, support, rho, kind, trial);
        if (trial_value > value) {
            coords = trial;
            value = trial_value;
            step = std::min(0.5, step * 1.3);
        } else {
            step *= 0.5;
        }
    }
}

}  // namespace

OracleResult brute_force_oracle(const SampleMatrix& X, std::size_t k, double rho,
                                UncertaintyKind kind, double resolution) {
    if (X.d > 8) {
        throw std::invalid_argument("brute_force_oracle: d > 8 refused");
    }
    if (k < 1 || k > X.d || k > 5) {
        throw std::invalid_argument("brute_force_oracle: need 1 <= k <= min(d, 5)");
    }
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("brute_force_oracle: resolution must be > 0");
    }

    OracleResult best;
    best.value = -kInf;
    std::size_t support_ordinal = 0;

    auto consider = [&](const std::vector<std::size_t>& support, const Vector& coords,
                        double value) {
        if (value > best.value) {
            best.value = value;
            best.argmax.d = X.d;
            best.argmax.support = support;
            best.argmax.values = coords;
        }
    };

    for (std::size_t size = 1; size <= k; ++size) {
        std::vector<std::size_t> support = first_combination(size);
        do {
            ++support_ordinal;
            Vector coords(size, 0.0);
            double value = 0.0;
            if (size == 1) {
                coords[0] = 1.0;
                value = oracle_value(X, support, rho, kind, coords);
                polish_on_sphere(X, support, rho, kind, coords, value);
            } else if (size == 2) {
                double best_theta = 0.0;
                double best_value = -kInf;
                double step = resolution;
                double center = 0.0, halfspan = 1.5707963267948966;  // pi/2
                for (int level = 0; level < 6; ++level) {
                    long count = static_cast<long>(std::ceil(2.0 * halfspan / step));
                    for (long t = 0; t <= count; ++t) {
                        double theta = center - halfspan + t * step;
                        Vector c = {std::cos(theta), std::sin(theta)};
                        double v = oracle_value(X, support, rho, kind, c);
                        if (v > best_value) {
                            best_value = v;
                            best_theta = theta;
                        }
                    }
                    center = best_theta;
                    halfspan = 2.0 * step;
                    step /= 10.0;
                }
                coords = {std::cos(best_theta), std::sin(best_theta)};
                value = best_value;
                polish_on_sphere(X, support, rho, kind, coords, value);
            } else if (size == 3) {
                double res = resolution;
                // Guard the grid size; the local refinement keeps accuracy.
                double cells = (3.2 / res) * (6.3 / res);
                if (cells > 3.0e7) res = std::sqrt(3.2 * 6.3 / 3.0e7);
                double best_phi = 0.0, best_theta = 0.0, best_value = -kInf;
                double cphi = 1.5707963267948966, hphi = 1.5707963267948966;
                double cth = 3.141592653589793, hth = 3.141592653589793;
                double step = res;
                for (int level = 0; level < 4; ++level) {
                    long nphi = static_cast<long>(std::ceil(2.0 * hphi / step));
                    long nth = static_cast<long>(std::ceil(2.0 * hth / step));
                    for (long p = 0; p <= nphi; ++p) {
                        double phi = cphi - hphi + p * step;
                        double sp = std::sin(phi), cp = std::cos(phi);
                        for (long t = 0; t <= nth; ++t) {
                            double th = cth - hth + t * step;
                            Vector c = {sp * std::cos(th), sp * std::sin(th), cp};
                            double v = oracle_value(X, support, rho, kind, c);
                            if (v > best_value) {
                                best_value = v;
                                best_phi = phi;
                                best_theta = th;
                            }
                        }
                    }
                    cphi = best_phi;
                    cth = best_theta;
                    hphi = 2.0 * step;
                    hth = 2.0 * step;
                    step /= 8.0;
                }
                double sp = std::sin(best_phi), cp = std::cos(best_phi);
                coords = {sp * std::cos(best_theta), sp * std::sin(best_theta), cp};
                value = best_value;
                polish_on_sphere(X, support, rho, kind, coords, value);
            } else {
                // 200-start projected gradient with step halving.
                GaussianStream gauss(12345 + 1000003ull * support_ordinal);
                double best_value = -kInf;
                Vector best_coords(size, 0.0);
                for (int start = 0; start < 200; ++start) {
                    Vector c(size);
                    for (std::size_t u = 0; u < size; ++u) c[u] = gauss.next();
                    double v = oracle_value(X, support, rho, kind, c);
                    if (v == -kInf) continue;
                    double nrm = norm2(c);
                    for (double& x : c) x /= nrm;
                    polish_on_sphere(X, support, rho, kind, c, v);
                    if (v > best_value) {
                        best_value = v;
                        best_coords = c;
                    }
                }
                coords = best_coords;
                value = best_value;
            }
            consider(support, coords, value);
        } while (next_combination(support, X.d));
    }

    // Canonical sign: the largest-magnitude coordinate is positive.
    std::size_t arg = 0;
    for (std::size_t u = 1; u < best.argmax.values.size(); ++u) {
        if (std::abs(best.argmax.values[u]) > std::abs(best.argmax.values[arg]) + 1e-15) {
            arg = u;
        }
    }
    if (!best.argmax.values.empty() && best.argmax.values[arg] < 0.0) {
        for (double& x : best.argmax.values) x = -x;
    }
    return best;
}

}  // namespace rspca
