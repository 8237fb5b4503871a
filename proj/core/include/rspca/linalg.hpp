#pragma once

// Dense symmetric linear algebra and k-sparse vector primitives used by the
// rest of the library: empirical covariances, a Jacobi eigensolver with a
// deterministic sign convention, and projection onto the set of k-sparse
// unit vectors.

#include <cstddef>
#include <optional>
#include <vector>

namespace rspca {

using Vector = std::vector<double>;

// ============================================================================
// Domain types
// ============================================================================

// Data matrix with one sample per row, stored row-major.
struct SampleMatrix {
    std::size_t n = 0;  // sample count (rows)
    std::size_t d = 0;  // feature dimension (columns)
    std::vector<double> data;  // n*d entries, row-major

    double at(std::size_t i, std::size_t j) const { return data[i * d + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * d + j]; }
    const double* row(std::size_t i) const { return data.data() + i * d; }
};

struct EigenBasis {
    std::size_t d = 0;
    Vector lambdas;  // eigenvalues, sorted descending
    // Orthonormal eigenvectors stored row-major as a d x d matrix whose
    // column j is the eigenvector paired with lambdas[j].
    std::vector<double> vectors;

    double vec(std::size_t i, std::size_t j) const { return vectors[i * d + j]; }
    Vector eigenvector(std::size_t j) const;
};

// Symmetric matrix (an empirical or population covariance), row-major, with
// an optional cached eigendecomposition.
struct Covariance {
    std::size_t d = 0;
    std::vector<double> entries;  // d*d entries, row-major, symmetric
    std::optional<EigenBasis> eigen;

    double at(std::size_t i, std::size_t j) const { return entries[i * d + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * d + j]; }
};

// Vector in R^d with at most k nonzeros, stored as a sorted support plus the
// values on that support.
struct KSparseVector {
    std::size_t d = 0;
    std::vector<std::size_t> support;  // sorted ascending
    Vector values;                     // aligned with support

    Vector dense() const;
    double norm2() const;
    double norm1() const;
};

// ============================================================================
// Operations
// ============================================================================

// Empirical second-moment matrix (1/n) X^T X. No mean-centering: the data
// model is zero-mean, and generators produce zero-mean samples. Pass
// center = true to subtract column means first.
Covariance covariance_from_samples(const SampleMatrix& X, bool center = false);

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Eigenvalues are returned in descending order; each eigenvector is scaled
// so its largest-magnitude component is positive (ties broken by the lowest
// index), making outputs byte-reproducible. Throws std::invalid_argument if
// the input is asymmetric beyond 1e-12 (relative to its largest entry).
EigenBasis symmetric_eigendecomposition(const Covariance& S);

// v^T S v touching only the support indices of v (O(k^2)).
double quadratic_form(const Covariance& S, const KSparseVector& v);

// Keeps the k largest-magnitude entries of x (ties broken toward the lower
// index), zeroes the rest, and rescales to unit Euclidean norm. Throws
// std::invalid_argument on a zero input (no defined direction).
KSparseVector top_k_sparse_project(const Vector& x, std::size_t k);

// ============================================================================
// Small dense helpers
// ============================================================================

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm1(const Vector& a);

// X v for a dense v of length d; result has length n.
Vector multiply(const SampleMatrix& X, const Vector& v);
// X^T u for u of length n; result has length d.
Vector multiply_transpose(const SampleMatrix& X, const Vector& u);
// S v for a dense v of length d.
Vector multiply(const Covariance& S, const Vector& v);

// Principal submatrix of S on the given sorted index set.
Covariance principal_submatrix(const Covariance& S, const std::vector<std::size_t>& idx);
// Column-restriction of X to the given sorted index set.
SampleMatrix restrict_columns(const SampleMatrix& X, const std::vector<std::size_t>& idx);

}  // namespace rspca
