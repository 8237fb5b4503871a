#include "rspca/micp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rspca/perturb.hpp"

namespace rspca {

namespace {

void validate_build(const SampleMatrix& X, const EigenBasis& eigen, std::size_t k,
                    double rho, int N) {
    if (X.n == 0 || X.d == 0) {
        throw std::invalid_argument("model builder: empty sample matrix");
    }
    if (eigen.d != X.d) {
        throw std::invalid_argument("model builder: eigenbasis dimension != data dimension");
    }
    if (k < 1 || k > X.d) {
        throw std::invalid_argument("model builder: need 1 <= k <= d");
    }
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw std::invalid_argument("model builder: rho must be finite and >= 0");
    }
    if (N < 1) {
        throw std::invalid_argument("model builder: N must be >= 1");
    }
}

MicpModel build_common(const SampleMatrix& X, const EigenBasis& eigen, std::size_t k,
                       double rho, int N, ModelKind kind, std::size_t r) {
    validate_build(X, eigen, k, rho, N);
    if (r < 1 || r > X.d) {
        throw std::invalid_argument("model builder: need 1 <= r <= d");
    }

    MicpModel m;
    m.kind = kind;
    m.d = X.d;
    m.n = X.n;
    m.k = k;
    m.r = r;
    m.N = N;
    m.rho = rho;
    m.X = X;
    m.sigma = covariance_from_samples(X);
    m.eigen = eigen;
    m.grid = build_grid(N);

    double max_row_norm = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < X.d; ++j) s += X.at(i, j) * X.at(i, j);
        max_row_norm = std::max(max_row_norm, std::sqrt(s));
    }
    m.rho_exceeds_row_norms = rho >= max_row_norm && rho > 0.0;
    m.expect_zero = rho * rho >= static_cast<double>(X.n) * eigen.lambdas[0];
    return m;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::SamplewiseFull: return "samplewise_full";
        case ModelKind::SamplewiseRankR: return "samplewise_rankr";
        case ModelKind::FeaturewiseFull: return "featurewise_full";
        case ModelKind::FeaturewiseRankR: return "featurewise_rankr";
    }
    return "unknown";
}

// ============================================================================
// Builders
// ============================================================================

MicpModel build_samplewise_full(const SampleMatrix& X, const EigenBasis& eigen,
                                std::size_t k, double rho, int N) {
    return build_common(X, eigen, k, rho, N, ModelKind::SamplewiseFull, X.d);
}

MicpModel build_samplewise_rank_r(const SampleMatrix& X, const EigenBasis& eigen,
                                  std::size_t k, double rho, int N, std::size_t r) {
    return build_common(X, eigen, k, rho, N, ModelKind::SamplewiseRankR, r);
}

MicpModel build_featurewise_full(const SampleMatrix& X, const EigenBasis& eigen,
                                 std::size_t k, double rho, int N) {
    return build_common(X, eigen, k, rho, N, ModelKind::FeaturewiseFull, X.d);
}

MicpModel build_featurewise_rank_r(const SampleMatrix& X, const EigenBasis& eigen,
                                   std::size_t k, double rho, int N, std::size_t r) {
    return build_common(X, eigen, k, rho, N, ModelKind::FeaturewiseRankR, r);
}

// ============================================================================
// Structure inspection
// ============================================================================

// Counting convention for constraints: unit ball (1); couplings g_j = <v_j,v>
// (one per group); SOS-II convexity/interpolation (three per group: weights
// sum to one, g is the knot combination, xi is the squared-knot combination);
// cardinality sum z <= k (1); variable links -z_i <= v_i <= z_i (2d).
// Sample-wise adds one concave-envelope constraint per sample. Feature-wise
// adds the cone (1) and the l1 split y >= sum s_i with -s_i <= v_i <= s_i
// (1 + 2d). Rank-reduced kinds add the residual constraint (1).
ModelStats model_stats(const MicpModel& m) {
    ModelStats st;
    const std::size_t groups = m.r;
    st.sos2_groups = groups;
    st.eta_weights = groups * (2 * static_cast<std::size_t>(m.N) + 1);
    st.binaries = m.d;

    st.continuous_vars = m.d            // v
                         + groups       // g
                         + groups       // xi
                         + st.eta_weights;
    st.constraints = 1                  // ball
                     + groups           // couplings
                     + 3 * groups       // SOS-II structure
                     + 1                // cardinality
                     + 2 * m.d;         // v-z links

    if (m.samplewise()) {
        st.continuous_vars += m.n;      // phi
        st.constraints += m.n;          // concave envelopes
    } else {
        st.continuous_vars += 2 + m.d;  // t, y, s
        st.constraints += 2 + 2 * m.d;  // cone, l1 sum, l1 splits
    }
    if (m.rank_reduced()) {
        st.continuous_vars += 1;        // gamma
        st.constraints += 1;            // residual mass
    }
    return st;
}

std::string model_to_json(const MicpModel& m) {
    nlohmann::ordered_json j;
    j["kind"] = model_kind_name(m.kind);
    j["d"] = m.d;
    j["n"] = m.n;
    j["k"] = m.k;
    j["N"] = m.N;
    j["r"] = m.rank_reduced() ? m.r : 0;
    j["rho"] = m.rho;
    j["expect_zero"] = m.expect_zero;
    j["rho_exceeds_row_norms"] = m.rho_exceeds_row_norms;

    ModelStats st = model_stats(m);
    j["stats"] = {{"continuous_vars", st.continuous_vars},
                  {"eta_weights", st.eta_weights},
                  {"binaries", st.binaries},
                  {"sos2_groups", st.sos2_groups},
                  {"constraints", st.constraints}};

    j["digests"] = {
        {"data", fnv1a(m.X.data.data(), m.X.data.size() * sizeof(double))},
        {"eigenvalues", fnv1a(m.eigen.lambdas.data(), m.eigen.lambdas.size() * sizeof(double))},
    };

    j["variables"] = nlohmann::ordered_json::array();
    j["variables"].push_back({{"block", "v"}, {"count", m.d}, {"lo", -1.0}, {"hi", 1.0}});
    j["variables"].push_back({{"block", "z"}, {"count", m.d}, {"binary", true}});
    j["variables"].push_back({{"block", "g"}, {"count", m.r}, {"lo", -1.0}, {"hi", 1.0}});
    j["variables"].push_back({{"block", "xi"}, {"count", m.r}, {"lo", 0.0}, {"hi", 1.0}});
    j["variables"].push_back({{"block", "eta"}, {"count", st.eta_weights}, {"lo", 0.0}, {"hi", 1.0}});
    if (m.samplewise()) {
        j["variables"].push_back({{"block", "phi"}, {"count", m.n}, {"hi", 0.0}});
    } else {
        double lam1 = m.eigen.lambdas[0];
        j["variables"].push_back(
            {{"block", "t"}, {"count", 1}, {"lo", 0.0},
             {"hi", std::sqrt(static_cast<double>(m.n) * std::max(0.0, lam1))}});
        j["variables"].push_back(
            {{"block", "y"}, {"count", 1}, {"lo", 0.0}, {"hi", std::sqrt(static_cast<double>(m.k))}});
        j["variables"].push_back({{"block", "s"}, {"count", m.d}, {"lo", 0.0}});
    }
    if (m.rank_reduced()) {
        j["variables"].push_back({{"block", "gamma"}, {"count", 1}, {"lo", 0.0}, {"hi", 1.0}});
    }

    j["constraint_blocks"] = nlohmann::ordered_json::array();
    j["constraint_blocks"].push_back("ball: |v|_2 <= 1");
    j["constraint_blocks"].push_back("coupling: g_j = <v_j, v> per group");
    j["constraint_blocks"].push_back("sos2: eta convexity, g and xi interpolation per group");
    j["constraint_blocks"].push_back("cardinality: sum z <= k, -z_i <= v_i <= z_i");
    if (m.samplewise()) {
        j["constraint_blocks"].push_back("envelope: phi_i <= concave loss part of <x_i, v>");
    } else {
        j["constraint_blocks"].push_back(
            m.rank_reduced()
                ? "cone: n*(sum lambda_j xi_j + lambda_next*gamma) >= (t + rho*y)^2"
                : "cone: n*sum lambda_j xi_j >= (t + rho*y)^2");
        j["constraint_blocks"].push_back("l1: y >= sum s_i, -s_i <= v_i <= s_i");
    }
    if (m.rank_reduced()) {
        j["constraint_blocks"].push_back("residual: sum_{j<=r} g_j^2 <= 1 - gamma");
    }
    return j.dump(2);
}

// ============================================================================
// Assignments
// ============================================================================

ModelAssignment induced_assignment(const MicpModel& m, const KSparseVector& v) {
    if (v.d != m.d) {
        throw std::invalid_argument("induced_assignment: dimension mismatch");
    }
    ModelAssignment a;
    a.v = v.dense();

    a.g.resize(m.r);
    a.xi.resize(m.r);
    double g_sq = 0.0;
    for (std::size_t j = 0; j < m.r; ++j) {
        double gj = dot(m.eigen.eigenvector(j), a.v);
        a.g[j] = gj;
        a.xi[j] = envelope(m.grid, gj);
        g_sq += gj * gj;
    }

    if (m.samplewise()) {
        a.phi.resize(m.n);
        for (std::size_t i = 0; i < m.n; ++i) {
            double t = 0.0;
            const double* row = m.X.row(i);
            for (std::size_t jj = 0; jj < m.d; ++jj) t += row[jj] * a.v[jj];
            a.phi[i] = phi_concave(t, m.rho);
        }
    } else {
        Vector Xv = multiply(m.X, a.v);
        a.y = norm1(a.v);
        a.t = std::max(0.0, norm2(Xv) - m.rho * a.y);
    }
    if (m.rank_reduced()) {
        a.gamma = std::max(0.0, 1.0 - g_sq);
    }
    return a;
}

double assignment_objective(const MicpModel& m, const ModelAssignment& a) {
    double weighted = 0.0;
    for (std::size_t j = 0; j < m.r; ++j) weighted += m.eigen.lambdas[j] * a.xi[j];
    if (m.rank_reduced()) weighted += m.lambda_next() * a.gamma;

    if (m.samplewise()) {
        double phi_sum = 0.0;
        for (double p : a.phi) phi_sum += p;
        return weighted + phi_sum / static_cast<double>(m.n);
    }
    // Feature-wise: report the squared optimal t/sqrt(n) compatible with the
    // assignment's cone capacity and l1 value.
    double capacity = static_cast<double>(m.n) * weighted;
    double t_best = std::max(0.0, std::sqrt(std::max(0.0, capacity)) - m.rho * a.y);
    return t_best * t_best / static_cast<double>(m.n);
}

bool assignment_feasible(const MicpModel& m, const ModelAssignment& a, double tol) {
    if (a.v.size() != m.d || a.g.size() != m.r || a.xi.size() != m.r) return false;

    double v_sq = 0.0;
    std::size_t nonzeros = 0;
    for (double vi : a.v) {
        if (std::abs(vi) > 1.0 + tol) return false;
        if (vi != 0.0) ++nonzeros;
        v_sq += vi * vi;
    }
    if (v_sq > 1.0 + tol) return false;
    if (nonzeros > m.k) return false;  // z assignment implied by the support

    double g_sq = 0.0;
    for (std::size_t j = 0; j < m.r; ++j) {
        double gj = dot(m.eigen.eigenvector(j), a.v);
        if (std::abs(gj - a.g[j]) > tol) return false;
        if (std::abs(a.g[j]) > 1.0 + tol) return false;
        // xi must be reachable by an SOS-II weight pair: on the envelope at g
        // (the maximizer) or anywhere down to g^2 is NOT allowed -- weights
        // reproduce exactly the chord of the containing segment.
        if (std::abs(a.xi[j] - envelope(m.grid, a.g[j])) > tol) return false;
        g_sq += a.g[j] * a.g[j];
    }

    if (m.samplewise()) {
        if (a.phi.size() != m.n) return false;
        for (std::size_t i = 0; i < m.n; ++i) {
            double t = 0.0;
            const double* row = m.X.row(i);
            for (std::size_t jj = 0; jj < m.d; ++jj) t += row[jj] * a.v[jj];
            if (a.phi[i] > phi_concave(t, m.rho) + tol) return false;
        }
    } else {
        double l1 = norm1(a.v);
        if (a.t < -tol) return false;
        if (a.y < l1 - tol) return false;
        if (a.y > std::sqrt(static_cast<double>(m.k)) + tol) return false;
        double capacity = 0.0;
        for (std::size_t j = 0; j < m.r; ++j) capacity += m.eigen.lambdas[j] * a.xi[j];
        if (m.rank_reduced()) capacity += m.lambda_next() * a.gamma;
        capacity *= static_cast<double>(m.n);
        double rhs = a.t + m.rho * a.y;
        if (rhs * rhs > capacity + tol * std::max(1.0, capacity)) return false;
    }
    if (m.rank_reduced()) {
        if (a.gamma < -tol || a.gamma > 1.0 + tol) return false;
        if (g_sq > 1.0 - a.gamma + tol) return false;
    }
    return true;
}

}  // namespace rspca
