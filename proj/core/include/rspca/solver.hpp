#pragma once

// Certified branch-and-bound for the model IR, plus a brute-force oracle for
// cross-checking on small instances.
//
// Node subproblems replace each SOS-II group's envelope with its secant over
// the node's interval, which makes the node objective concave; a
// supergradient inequality evaluated at an ascent iterate then yields a
// certified upper bound whose validity never depends on the ascent having
// converged. Nodes are also capped by a spectral bound (restricted top
// eigenvalue plus the per-group secant slack) and, for feature-wise models,
// by a monotone radial-grid bound. Branching bisects the weight-group
// interval with the largest secant-versus-square discrepancy at the node's
// bounding argmax (or fixes binaries first in BranchBinaries mode).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rspca/micp.hpp"
#include "rspca/perturb.hpp"

namespace rspca {

// ============================================================================
// Options, statuses, reports
// ============================================================================

enum class SolveMode { EnumerateSupports, BranchBinaries };

enum class SolveStatus { Optimal, GapReached, NodeLimit, TimeLimit, AllPerturbed };

const char* status_name(SolveStatus status);

struct SolverOptions {
    double abs_gap = 1e-4;
    double rel_gap = 1e-3;
    long node_limit = 1000000;
    double time_limit_s = 1800.0;
    SolveMode mode = SolveMode::EnumerateSupports;
    int relax_iters = 500;  // ascent budget at root and single-segment nodes
    std::uint64_t seed = 0;
    // When false, wall_ms is reported as 0 and the wall clock is never
    // consulted (time_limit_s is ignored), making reports byte-reproducible.
    bool timing = true;
};

struct SolveReport {
    double lb = 0.0;   // exact objective of the incumbent
    double ub = 0.0;   // certified bound on the model optimum
    double gap = 0.0;  // (ub - lb) / max(lb, 1e-12)
    long nodes = 0;
    long wall_ms = 0;
    SolveStatus status = SolveStatus::Optimal;
    KSparseVector incumbent;
    bool incumbent_feasible = true;  // feature-wise: margin >= 0 at the incumbent
    // Residual mass at the incumbent, reported for rank-reduced models only.
    std::optional<double> gamma_hat;
};

// Serializes a report (with the dimensions of the model it came from) to the
// stable JSON schema used by the CLI.
std::string solve_report_to_json(const MicpModel& m, const SolveReport& report);

// ============================================================================
// Branch-and-bound
// ============================================================================

// One node of the search tree: support fixings for the binaries and one
// interval per SOS-II group.
struct BnbNode {
    std::vector<std::size_t> forced_in;   // z_i = 1
    std::vector<std::size_t> forced_out;  // z_i = 0
    std::vector<SegmentInterval> intervals;
    double parent_bound = 0.0;
};

SolveReport solve(const MicpModel& m, const SolverOptions& opts,
                  const KSparseVector* warm = nullptr);

// Certified upper bound of the node subproblem on the reported value scale.
// Returns -infinity for contradictory fixings. Pure, single evaluation with
// the given ascent budget; the engine combines it with parent bounds.
double relax_bound(const MicpModel& m, const BnbNode& node, int ascent_iters = 500);

struct RoundResult {
    KSparseVector v;
    double value = 0.0;
    bool feasible = true;
};

// Projects a relaxation iterate onto the k-sparse unit sphere and evaluates
// the exact objective (the model's own evaluator, not the relaxation).
RoundResult round_incumbent(const MicpModel& m, const Vector& relaxed_v);

// ============================================================================
// Brute-force oracle
// ============================================================================

struct OracleResult {
    double value = 0.0;
    KSparseVector argmax;
};

// Maximizes the exact objective over all supports of size <= k: dense
// angular grids for supports of dimension <= 3 (grid-exact up to the
// resolution), seeded 200-start projected gradient with step halving for
// dimensions 4 and 5. Refuses d > 8 or k > 5.
OracleResult brute_force_oracle(const SampleMatrix& X, std::size_t k, double rho,
                                UncertaintyKind kind, double resolution);

}  // namespace rspca
