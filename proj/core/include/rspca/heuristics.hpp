#pragma once

// Primal heuristics: the projected power method for the feature-wise robust
// objective, the truncated power method with submatrix eigenvector
// refinement for vanilla sparse PCA, the two-stage dimension reduction that
// selects a working submatrix, and exact sparse PCA by support enumeration
// (the certified baseline at small scale).

#include <cstdint>
#include <utility>
#include <vector>

#include "rspca/linalg.hpp"

namespace rspca {

// ============================================================================
// Feature-wise gradient and projected power method
// ============================================================================

// Gradient of v -> ((|Xv|_2 - rho*|v|_1)_+)^2 wherever |Xv|_2 > 0:
//   2(|Xv|_2 - rho*|v|_1)_+ * (X^T X v / |Xv|_2 - rho * sgn(v)),
// with sgn(0) := 0 (a subgradient selection). Returns the zero vector when
// X v = 0 (no defined direction) and on the exhausted-budget region
// |Xv|_2 <= rho*|v|_1, where the clamped objective is identically zero.
Vector featurewise_gradient(const SampleMatrix& X, const Vector& v, double rho);

enum class PpmInit { FromSpca, Random, Given };

struct PpmOptions {
    int max_iter = 1000;
    double tol = 1e-6;
    PpmInit init = PpmInit::FromSpca;
    std::uint64_t seed = 0;  // used by Random init only
};

struct PpmResult {
    KSparseVector v;
    std::vector<double> trace;  // exact objective value after each iteration
    int iters = 0;
    bool zero_gradient_stop = false;
};

// Projected power method: v <- top_k_sparse_project(gradient(v)) until the
// iterate moves less than tol or max_iter is reached. v0 is required for
// PpmInit::Given and ignored otherwise.
PpmResult ppm(const SampleMatrix& X, std::size_t k, double rho, const PpmOptions& opts,
              const KSparseVector* v0 = nullptr);

// ============================================================================
// Vanilla sparse PCA heuristics
// ============================================================================

// Truncated power method with refinement: each iteration projects S*v onto
// the k-sparse sphere, then replaces the iterate by the leading eigenvector
// of the principal submatrix on the selected support. Returns the best
// iterate seen (by Rayleigh quotient). v0 defaults to the top-k projection
// of the leading eigenvector of S.
KSparseVector truncated_power(const Covariance& S, std::size_t k, int max_iter = 100,
                              double tol = 1e-10, const KSparseVector* v0 = nullptr);

struct SubmatrixSelection {
    std::vector<std::size_t> support;  // sorted, size d_bar
    Covariance S_sub;                  // principal submatrix on support
};

// Two-stage reduction: T truncated-power refinement iterations track the
// best k-support, which is then padded to size d_bar with the largest
// diagonal entries of S outside it (ties to the lower index).
SubmatrixSelection submatrix_init(const Covariance& S, std::size_t k, std::size_t d_bar,
                                  int T = 100, const KSparseVector* v0 = nullptr);

struct SparsePcaValue {
    double value = 0.0;
    KSparseVector v;
};

// Exact k-sparse maximum eigenvalue by enumeration of all size-k supports;
// refuses instances with more than max_supports supports.
SparsePcaValue sparse_pca_exact(const Covariance& S, std::size_t k,
                                std::size_t max_supports = 1000000);

}  // namespace rspca
