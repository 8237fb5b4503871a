#pragma once

// Solver-agnostic intermediate representation of the four mixed-integer
// convex formulations of robust sparse PCA. A model bundles the data, the
// eigendecomposition of the empirical covariance, the secant grid, and the
// structural dimensions; the branch-and-bound engine interprets it.
//
// The four kinds:
//   SamplewiseFull   max sum_j lambda_j xi_j + (1/n) sum_i phi_i
//   SamplewiseRankR  as above with only r weight groups plus a residual
//                    mass term lambda_{r+1} * gamma
//   FeaturewiseFull  max t/sqrt(n) subject to the cone
//                    n sum_j lambda_j xi_j >= (t + rho*y)^2
//   FeaturewiseRankR cone with r groups plus n*lambda_{r+1}*gamma
//
// Shared structure: v in [-1,1]^d with binaries z (sum z <= k,
// -z_i <= v_i <= z_i), ball |v|_2 <= 1, couplings g_j = <v_j, v>, SOS-II
// weight groups eta tying xi_j to the secant envelope of g_j^2, y >= |v|_1
// split through nonnegative s_i, t in [0, sqrt(n*lambda_1)], gamma in [0,1]
// with sum_{j<=r} g_j^2 <= 1 - gamma.

#include <cstdint>
#include <string>

#include "rspca/linalg.hpp"
#include "rspca/piecewise.hpp"

namespace rspca {

enum class ModelKind {
    SamplewiseFull,
    SamplewiseRankR,
    FeaturewiseFull,
    FeaturewiseRankR,
};

// Short stable identifier used in reports: "samplewise_full" etc.
const char* model_kind_name(ModelKind kind);

struct MicpModel {
    ModelKind kind = ModelKind::SamplewiseFull;
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t r = 0;  // SOS-II group count; equals d for the Full kinds
    int N = 1;
    double rho = 0.0;

    SampleMatrix X;
    Covariance sigma;  // (1/n) X^T X
    EigenBasis eigen;
    PluGrid grid;

    // Trivial-regime flags. expect_zero: feature-wise with rho^2 >= n*lambda_1,
    // so the adversary can cancel every direction and the optimum is 0.
    // rho_exceeds_row_norms: sample-wise with rho at least the largest sample
    // norm, so every per-sample loss vanishes.
    bool expect_zero = false;
    bool rho_exceeds_row_norms = false;

    bool samplewise() const {
        return kind == ModelKind::SamplewiseFull || kind == ModelKind::SamplewiseRankR;
    }
    bool rank_reduced() const {
        return kind == ModelKind::SamplewiseRankR || kind == ModelKind::FeaturewiseRankR;
    }
    // Weight on the residual-mass variable gamma: the (r+1)-th eigenvalue,
    // or 0 when all d groups are present (gamma then has no effect).
    double lambda_next() const {
        return r < d ? eigen.lambdas[r] : 0.0;
    }
};

// ============================================================================
// Builders
// ============================================================================

MicpModel build_samplewise_full(const SampleMatrix& X, const EigenBasis& eigen,
                                std::size_t k, double rho, int N);
MicpModel build_samplewise_rank_r(const SampleMatrix& X, const EigenBasis& eigen,
                                  std::size_t k, double rho, int N, std::size_t r);
MicpModel build_featurewise_full(const SampleMatrix& X, const EigenBasis& eigen,
                                 std::size_t k, double rho, int N);
MicpModel build_featurewise_rank_r(const SampleMatrix& X, const EigenBasis& eigen,
                                   std::size_t k, double rho, int N, std::size_t r);

// ============================================================================
// Structure inspection
// ============================================================================

struct ModelStats {
    std::size_t continuous_vars = 0;  // v, g, xi, eta, and phi/t/y/s/gamma as applicable
    std::size_t eta_weights = 0;      // SOS-II weights alone: groups * (2N+1)
    std::size_t binaries = 0;         // z
    std::size_t sos2_groups = 0;
    std::size_t constraints = 0;      // see counting convention in micp.cpp
};

ModelStats model_stats(const MicpModel& m);

// Debug serialization: kind, dimensions, variable/constraint counts, and
// FNV-1a digests of the data. Not a stable interchange format.
std::string model_to_json(const MicpModel& m);

// ============================================================================
// Assignments (used to check round-trip soundness)
// ============================================================================

// A point in the model's continuous variable space. The SOS-II weights are
// implied: each g_j selects its containing grid segment and xi_j is the
// chord value there.
struct ModelAssignment {
    Vector v;       // length d
    Vector g;       // length = group count
    Vector xi;      // length = group count
    Vector phi;     // length n for sample-wise kinds, empty otherwise
    double t = 0.0;
    double y = 0.0;
    double gamma = 0.0;
};

// Canonical feasible assignment induced by a k-sparse unit vector:
// g = V^T v on the model's groups, xi the secant envelope at g, phi the
// concave loss part per sample, y = |v|_1, t the nonnegative robust margin,
// gamma the residual mass 1 - sum_j g_j^2 for rank-reduced kinds.
ModelAssignment induced_assignment(const MicpModel& m, const KSparseVector& v);

// Objective value of an assignment under the model's objective, on the
// reported scale: the plain objective for sample-wise kinds and the largest
// (t/sqrt(n))^2 compatible with the assignment's xi, gamma, and y for
// feature-wise kinds.
double assignment_objective(const MicpModel& m, const ModelAssignment& a);

// Checks every model constraint to the given tolerance.
bool assignment_feasible(const MicpModel& m, const ModelAssignment& a, double tol = 1e-9);

}  // namespace rspca
