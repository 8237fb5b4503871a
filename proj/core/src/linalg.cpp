#include "rspca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rspca {

// ============================================================================
// Internal helpers
// ============================================================================

namespace {

void validate_sample_matrix(const SampleMatrix& X) {
    if (X.n == 0 || X.d == 0) {
        throw std::invalid_argument("sample matrix must have n >= 1 and d >= 1");
    }
    if (X.data.size() != X.n * X.d) {
        throw std::invalid_argument("sample matrix storage size does not match n*d");
    }
    for (double v : X.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("sample matrix contains a non-finite entry");
        }
    }
}

void validate_symmetric(const Covariance& S) {
    if (S.d == 0 || S.entries.size() != S.d * S.d) {
        throw std::invalid_argument("covariance storage size does not match d*d");
    }
    double scale = 1.0;
    for (double v : S.entries) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < S.d; ++i) {
        for (std::size_t j = i + 1; j < S.d; ++j) {
            if (std::abs(S.at(i, j) - S.at(j, i)) > 1e-12 * scale) {
                throw std::invalid_argument(
                    "matrix is not symmetric: entry (" + std::to_string(i) + "," +
                    std::to_string(j) + ") differs from its mirror");
            }
        }
    }
}

double off_diagonal_norm(const std::vector<double>& a, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            s += 2.0 * a[i * d + j] * a[i * d + j];
        }
    }
    return std::sqrt(s);
}

}  // namespace

// ============================================================================
// Domain type members
// ============================================================================

Vector EigenBasis::eigenvector(std::size_t j) const {
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = vectors[i * d + j];
    return v;
}

Vector KSparseVector::dense() const {
    Vector v(d, 0.0);
    for (std::size_t t = 0; t < support.size(); ++t) v[support[t]] = values[t];
    return v;
}

double KSparseVector::norm2() const {
    double s = 0.0;
    for (double x : values) s += x * x;
    return std::sqrt(s);
}

double KSparseVector::norm1() const {
    double s = 0.0;
    for (double x : values) s += std::abs(x);
    return s;
}

// ============================================================================
// Covariance
// ============================================================================

Covariance covariance_from_samples(const SampleMatrix& X, bool center) {
    validate_sample_matrix(X);
    std::vector<double> rows = X.data;
    if (center) {
        for (std::size_t j = 0; j < X.d; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < X.n; ++i) mean += rows[i * X.d + j];
            mean /= static_cast<double>(X.n);
            for (std::size_t i = 0; i < X.n; ++i) rows[i * X.d + j] -= mean;
        }
    }

    Covariance S;
    S.d = X.d;
    S.entries.assign(X.d * X.d, 0.0);
    // Compute the upper triangle, then mirror, so symmetry is exact.
    for (std::size_t i = 0; i < X.d; ++i) {
        for (std::size_t j = i; j < X.d; ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s < X.n; ++s) {
                acc += rows[s * X.d + i] * rows[s * X.d + j];
            }
            acc /= static_cast<double>(X.n);
            S.entries[i * X.d + j] = acc;
            S.entries[j * X.d + i] = acc;
        }
    }
    return S;
}

// ============================================================================
// Jacobi eigendecomposition
// ============================================================================

EigenBasis symmetric_eigendecomposition(const Covariance& S) {
    validate_symmetric(S);
    const std::size_t d = S.d;
    std::vector<double> a = S.entries;   // working copy, diagonalized in place
    std::vector<double> v(d * d, 0.0);   // accumulated rotations
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    double fro = 0.0;
    for (double x : a) fro += x * x;
    const double stop = 1e-13 * std::max(1.0, std::sqrt(fro));

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a, d) <= stop) break;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                double apq = a[p * d + q];
                if (std::abs(apq) <= 1e-300) continue;
                double app = a[p * d + p];
                double aqq = a[q * d + q];
                // Classic Jacobi rotation: choose the smaller-angle root of
                // t^2 + 2*theta*t - 1 = 0 for stability.
                double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                    if (theta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                for (std::size_t i = 0; i < d; ++i) {
                    double aip = a[i * d + p];
                    double aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    double apj = a[p * d + j];
                    double aqj = a[q * d + j];
                    a[p * d + j] = c * apj - s * aqj;
                    a[q * d + j] = s * apj + c * aqj;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double vip = v[i * d + p];
                    double viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }

    // Order eigenpairs by descending eigenvalue. The permutation is applied
    // to the columns of v.
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a[x * d + x] > a[y * d + y];
    });

    EigenBasis basis;
    basis.d = d;
    basis.lambdas.resize(d);
    basis.vectors.assign(d * d, 0.0);
    for (std::size_t jj = 0; jj < d; ++jj) {
        std::size_t src = order[jj];
        basis.lambdas[jj] = a[src * d + src];
        // Sign convention: the largest-magnitude component of each
        // eigenvector is positive; ties go to the lowest index.
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < d; ++i) {
            double mag = std::abs(v[i * d + src]);
            if (mag > best + 1e-15) {
                best = mag;
                arg = i;
            }
        }
        double sign = (v[arg * d + src] < 0.0) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            basis.vectors[i * d + jj] = sign * v[i * d + src];
        }
    }
    return basis;
}

// ============================================================================
// Quadratic forms and projections
// ============================================================================

double quadratic_form(const Covariance& S, const KSparseVector& v) {
    if (v.d != S.d) {
        throw std::invalid_argument("quadratic_form: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < v.support.size(); ++a) {
        for (std::size_t b = 0; b < v.support.size(); ++b) {
            acc += v.values[a] * S.at(v.support[a], v.support[b]) * v.values[b];
        }
    }
    return acc;
}

KSparseVector top_k_sparse_project(const Vector& x, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("top_k_sparse_project: k must be >= 1");
    }
    const std::size_t d = x.size();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    // Sort by magnitude descending; stable_sort keeps the lower index first
    // on ties, which is the documented tie rule.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(x[a]) > std::abs(x[b]);
    });

    std::vector<std::size_t> keep;
    for (std::size_t t = 0; t < std::min(k, d); ++t) {
        if (x[order[t]] != 0.0) keep.push_back(order[t]);
    }
    if (keep.empty()) {
        throw std::invalid_argument("top_k_sparse_project: input has no nonzero entry");
    }
    std::sort(keep.begin(), keep.end());

    KSparseVector out;
    out.d = d;
    out.support = keep;
    out.values.resize(keep.size());
    double nrm = 0.0;
    for (std::size_t t = 0; t < keep.size(); ++t) {
        out.values[t] = x[keep[t]];
        nrm += out.values[t] * out.values[t];
    }
    nrm = std::sqrt(nrm);
    for (double& val : out.values) val /= nrm;
    return out;
}

// ============================================================================
// Dense helpers
// ============================================================================

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) {
    return std::sqrt(dot(a, a));
}

double norm1(const Vector& a) {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

Vector multiply(const SampleMatrix& X, const Vector& v) {
    Vector out(X.n, 0.0);
    for (std::size_t i = 0; i < X.n; ++i) {
        const double* r = X.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < X.d; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Vector multiply_transpose(const SampleMatrix& X, const Vector& u) {
    Vector out(X.d, 0.0);
    for (std::size_t i = 0; i < X.n; ++i) {
        const double* r = X.row(i);
        for (std::size_t j = 0; j < X.d; ++j) out[j] += r[j] * u[i];
    }
    return out;
}

Vector multiply(const Covariance& S, const Vector& v) {
    Vector out(S.d, 0.0);
    for (std::size_t i = 0; i < S.d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < S.d; ++j) acc += S.at(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

Covariance principal_submatrix(const Covariance& S, const std::vector<std::size_t>& idx) {
    Covariance out;
    out.d = idx.size();
    out.entries.resize(idx.size() * idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            out.entries[a * idx.size() + b] = S.at(idx[a], idx[b]);
        }
    }
    return out;
}

SampleMatrix restrict_columns(const SampleMatrix& X, const std::vector<std::size_t>& idx) {
    SampleMatrix out;
    out.n = X.n;
    out.d = idx.size();
    out.data.resize(X.n * idx.size());
    for (std::size_t i = 0; i < X.n; ++i) {
        for (std::size_t t = 0; t < idx.size(); ++t) {
            out.data[i * idx.size() + t] = X.at(i, idx[t]);
        }
    }
    return out;
}

}  // namespace rspca
