#include "rspca/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rspca/combinatorics.hpp"
#include "rspca/perturb.hpp"
#include "rspca/rng.hpp"

namespace rspca {

namespace {

// Leading unit eigenvector of the principal submatrix of S on `support`,
// embedded back into R^d with the solver-wide sign convention.
KSparseVector leading_restricted_eigenvector(const Covariance& S,
                                             const std::vector<std::size_t>& support) {
    Covariance sub = principal_submatrix(S, support);
    EigenBasis basis = symmetric_eigendecomposition(sub);
    KSparseVector v;
    v.d = S.d;
    v.support = support;
    v.values = basis.eigenvector(0);
    return v;
}

KSparseVector default_power_start(const Covariance& S, std::size_t k) {
    EigenBasis basis = symmetric_eigendecomposition(S);
    return top_k_sparse_project(basis.eigenvector(0), k);
}

double dense_distance(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

// ============================================================================
// Feature-wise gradient and projected power method
// ============================================================================

Vector featurewise_gradient(const SampleMatrix& X, const Vector& v, double rho) {
    if (v.size() != X.d) {
        throw std::invalid_argument("featurewise_gradient: dimension mismatch");
    }
    Vector Xv = multiply(X, v);
    const double xv_norm = norm2(Xv);
    if (xv_norm == 0.0) {
        return Vector(X.d, 0.0);  // zero-gradient sentinel
    }
    const double margin = xv_norm - rho * norm1(v);
    if (margin <= 0.0) {
        // The clamped objective is identically zero on this region, so its
        // gradient vanishes (and is continuous across the hinge).
        return Vector(X.d, 0.0);
    }
    Vector xtxv = multiply_transpose(X, Xv);
    Vector grad(X.d);
    for (std::size_t i = 0; i < X.d; ++i) {
        double sgn = (v[i] > 0.0) ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
        grad[i] = 2.0 * margin * (xtxv[i] / xv_norm - rho * sgn);
    }
    return grad;
}

PpmResult ppm(const SampleMatrix& X, std::size_t k, double rho, const PpmOptions& opts,
              const KSparseVector* v0) {
    if (k < 1 || k > X.d) {
        throw std::invalid_argument("ppm: need 1 <= k <= d");
    }

    KSparseVector current;
    switch (opts.init) {
        case PpmInit::FromSpca: {
            Covariance S = covariance_from_samples(X);
            current = truncated_power(S, k);
            break;
        }
        case PpmInit::Random: {
            GaussianStream gauss(opts.seed);
            Vector x(X.d);
            for (std::size_t i = 0; i < X.d; ++i) x[i] = gauss.next();
            current = top_k_sparse_project(x, k);
            break;
        }
        case PpmInit::Given: {
            if (v0 == nullptr) {
                throw std::invalid_argument("ppm: Given init requires a start vector");
            }
            current = *v0;
            break;
        }
    }

    PpmResult result;
    Vector dense = current.dense();
    for (int it = 0; it < opts.max_iter; ++it) {
        Vector grad = featurewise_gradient(X, dense, rho);
        if (norm2(grad) == 0.0) {
            result.zero_gradient_stop = true;
            break;
        }
        KSparseVector next = top_k_sparse_project(grad, k);
        Vector next_dense = next.dense();
        result.iters = it + 1;
        result.trace.push_back(objective_featurewise(X, next, rho).value);
        double moved = dense_distance(next_dense, dense);
        current = std::move(next);
        dense = std::move(next_dense);
        if (moved < opts.tol) break;
    }
    result.v = std::move(current);
    return result;
}

// ============================================================================
// Vanilla sparse PCA heuristics
// ============================================================================

KSparseVector truncated_power(const Covariance& S, std::size_t k, int max_iter, double tol,
                              const KSparseVector* v0) {
    if (k < 1 || k > S.d) {
        throw std::invalid_argument("truncated_power: need 1 <= k <= d");
    }
    KSparseVector current = (v0 != nullptr) ? *v0 : default_power_start(S, k);

    KSparseVector best = current;
    double best_value = quadratic_form(S, best);

    Vector dense = current.dense();
    for (int it = 0; it < max_iter; ++it) {
        Vector w = multiply(S, dense);
        if (norm2(w) == 0.0) break;
        KSparseVector projected = top_k_sparse_project(w, k);
        // Refinement: restrict to the selected support and take the exact
        // leading eigenvector there.
        KSparseVector refined = leading_restricted_eigenvector(S, projected.support);
        double value = quadratic_form(S, refined);
        if (value > best_value) {
            best_value = value;
            best = refined;
        }
        Vector refined_dense = refined.dense();
        double moved = dense_distance(refined_dense, dense);
        current = std::move(refined);
        dense = std::move(refined_dense);
        if (moved < tol) break;
    }
    return best;
}

SubmatrixSelection submatrix_init(const Covariance& S, std::size_t k, std::size_t d_bar,
                                  int T, const KSparseVector* v0) {
    if (k > d_bar || d_bar > S.d) {
        throw std::invalid_argument("submatrix_init: need k <= d_bar <= d");
    }
    if (T < 1) {
        throw std::invalid_argument("submatrix_init: need T >= 1");
    }

    KSparseVector best = truncated_power(S, k, T, 0.0, v0);
    std::vector<std::size_t> support = best.support;

    // Pad with the largest diagonal entries outside the selected support
    // (ties to the lower index).
    std::vector<char> taken(S.d, 0);
    for (std::size_t idx : support) taken[idx] = 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < S.d; ++i) {
        if (!taken[i]) rest.push_back(i);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
        return S.at(a, a) > S.at(b, b);
    });
    for (std::size_t t = 0; support.size() < d_bar; ++t) support.push_back(rest[t]);
    std::sort(support.begin(), support.end());

    SubmatrixSelection sel;
    sel.support = support;
    sel.S_sub = principal_submatrix(S, support);
    return sel;
}

SparsePcaValue sparse_pca_exact(const Covariance& S, std::size_t k,
                                std::size_t max_supports) {
    if (k < 1 || k > S.d) {
        throw std::invalid_argument("sparse_pca_exact: need 1 <= k <= d");
    }
    if (binomial_capped(S.d, k, max_supports) >= max_supports) {
        throw std::invalid_argument("sparse_pca_exact: too many supports to enumerate");
    }

    SparsePcaValue best;
    best.value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> support = first_combination(k);
    do {
        Covariance sub = principal_submatrix(S, support);
        EigenBasis basis = symmetric_eigendecomposition(sub);
        if (basis.lambdas[0] > best.value) {
            best.value = basis.lambdas[0];
            best.v.d = S.d;
            best.v.support = support;
            best.v.values = basis.eigenvector(0);
        }
    } while (next_combination(support, S.d));
    return best;
}

}  // namespace rspca
