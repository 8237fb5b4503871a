#include "rspca/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rspca {

namespace {

void validate_unit(const KSparseVector& v, const char* where) {
    if (std::abs(v.norm2() - 1.0) > 1e-10) {
        throw std::invalid_argument(std::string(where) + ": vector must have unit norm");
    }
}

}  // namespace

// ============================================================================
// Pointwise losses
// ============================================================================

double loss_samplewise_unit(double t, double rho) {
    if (t > rho) {
        double r = t - rho;
        return r * r;
    }
    if (t < -rho) {
        double r = t + rho;
        return r * r;
    }
    return 0.0;
}

double phi_concave(double t, double rho) {
    if (t > rho) return -2.0 * rho * t + rho * rho;
    if (t < -rho) return 2.0 * rho * t + rho * rho;
    return -t * t;
}

double phi_concave_derivative(double t, double rho) {
    if (t > rho) return -2.0 * rho;
    if (t < -rho) return 2.0 * rho;
    return -2.0 * t;
}

// ============================================================================
// Projections
// ============================================================================

Vector project_samplewise(const Vector& Xv, double rho, double v_norm) {
    const double cap = rho * v_norm;
    Vector u(Xv.size());
    for (std::size_t i = 0; i < Xv.size(); ++i) {
        u[i] = std::clamp(Xv[i], -cap, cap);
    }
    return u;
}

Vector project_featurewise(const Vector& Xv, double rho, double v_l1) {
    const double cap = rho * v_l1;
    const double nrm = norm2(Xv);
    if (nrm <= cap || nrm == 0.0) return Xv;
    Vector u(Xv.size());
    const double scale = cap / nrm;
    for (std::size_t i = 0; i < Xv.size(); ++i) u[i] = scale * Xv[i];
    return u;
}

// ============================================================================
// Objectives
// ============================================================================

double objective_samplewise_dense(const SampleMatrix& X, const Vector& v, double rho) {
    Vector Xv = multiply(X, v);
    double acc = 0.0;
    for (double t : Xv) acc += loss_samplewise_unit(t, rho);
    return acc / static_cast<double>(X.n);
}

FeaturewiseValue objective_featurewise_dense(const SampleMatrix& X, const Vector& v,
                                             double rho) {
    Vector Xv = multiply(X, v);
    double margin = norm2(Xv) - rho * norm1(v);
    FeaturewiseValue out;
    if (margin < 0.0) {
        out.value = 0.0;
        out.feasible = false;
    } else {
        out.value = margin * margin / static_cast<double>(X.n);
        out.feasible = true;
    }
    return out;
}

double objective_samplewise(const SampleMatrix& X, const KSparseVector& v, double rho) {
    validate_unit(v, "objective_samplewise");
    if (v.d != X.d) {
        throw std::invalid_argument("objective_samplewise: dimension mismatch");
    }
    return objective_samplewise_dense(X, v.dense(), rho);
}

FeaturewiseValue objective_featurewise(const SampleMatrix& X, const KSparseVector& v,
                                       double rho) {
    validate_unit(v, "objective_featurewise");
    if (v.d != X.d) {
        throw std::invalid_argument("objective_featurewise: dimension mismatch");
    }
    return objective_featurewise_dense(X, v.dense(), rho);
}

}  // namespace rspca
