#pragma once

// Adversarial uncertainty sets for the robust sparse-PCA objective: the
// pointwise losses, their convex/concave decomposition, the closed-form
// projections of X v onto each perturbation ball, and exact objective
// evaluators for both perturbation types.
//
// Sample-wise: the adversary perturbs each sample by at most rho in
// Euclidean norm (max-row-norm budget). Feature-wise: the perturbation's
// columns have Euclidean norm at most rho (max-column-norm budget).

#include "rspca/linalg.hpp"

namespace rspca {

enum class UncertaintyKind { SampleWise, FeatureWise };

struct UncertaintyConfig {
    UncertaintyKind kind = UncertaintyKind::SampleWise;
    double rho = 0.0;  // perturbation magnitude, >= 0
};

// ============================================================================
// Pointwise losses (sample-wise)
// ============================================================================

// Residual loss of one sample after the adversary clamps its inner product
// to [-rho, rho]: 0 for |t| <= rho, (t-rho)^2 for t > rho, (t+rho)^2 for
// t < -rho. Convex and continuous in t.
double loss_samplewise_unit(double t, double rho);

// Concave part of the decomposition loss(t) = t^2 + phi(t):
// -t^2 for |t| <= rho, -2*rho*t + rho^2 for t > rho, 2*rho*t + rho^2 for
// t < -rho. Always <= 0, concave, C^1 at the kinks.
double phi_concave(double t, double rho);

// Derivative of phi_concave in t (C^1, so this is a true derivative).
double phi_concave_derivative(double t, double rho);

// ============================================================================
// Closed-form projections of X v onto the perturbation ball
// ============================================================================

// Sample-wise: coordinatewise clamp of X v to [-rho*|v|_2, +rho*|v|_2].
Vector project_samplewise(const Vector& Xv, double rho, double v_norm);

// Feature-wise: radial shrink of X v onto the ball of radius rho*|v|_1.
Vector project_featurewise(const Vector& Xv, double rho, double v_l1);

// ============================================================================
// Exact objectives
// ============================================================================

// (1/n) sum_i loss(<x_i, v>, rho) for a unit k-sparse v. Equal to
// (1/n) |Xv - project_samplewise(Xv)|_2^2. Throws if v is not unit norm.
double objective_samplewise(const SampleMatrix& X, const KSparseVector& v, double rho);

struct FeaturewiseValue {
    double value = 0.0;   // (1/n)(|Xv|_2 - rho*|v|_1)^2 when feasible, else 0
    bool feasible = true;  // |Xv|_2 - rho*|v|_1 >= 0
};

// Feature-wise robust variance of a unit k-sparse v. When the adversary can
// cancel the whole projection (|Xv|_2 < rho*|v|_1) the value is clipped to 0
// and flagged infeasible rather than raising, so sweeps over large rho run
// to completion.
FeaturewiseValue objective_featurewise(const SampleMatrix& X, const KSparseVector& v,
                                       double rho);

// Dense-vector overloads used by solver internals (same formulas, no
// sparsity bookkeeping). The vector must still be unit for the sample-wise
// form to be meaningful; these do not validate.
double objective_samplewise_dense(const SampleMatrix& X, const Vector& v, double rho);
FeaturewiseValue objective_featurewise_dense(const SampleMatrix& X, const Vector& v,
                                             double rho);

}  // namespace rspca
