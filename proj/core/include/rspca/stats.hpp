#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rspca/linalg.hpp"

namespace rspca {

// ============================================================================
// Spiked-model data generation and population-level formulas
// ============================================================================

// Planted single-spike model: samples are N(0, lambda * v* v*^T + I).
struct SpikedModel {
    std::size_t d = 0;
    double lambda = 0.0;  // spike eigengap, > 0 (0 allowed: pure noise)
    KSparseVector v_star;
};

// Strong/weak split of the planted support: k1 entries of magnitude
// sqrt(c/k1) and k2 entries of magnitude sqrt((1-c)/k2), c in (1/2, 1).
// Empty index sets select the default prefix blocks {0..k1-1}, {k1..k1+k2-1}.
struct StrongWeakSpec {
    double c = 0.8;
    std::size_t k1 = 1;
    std::size_t k2 = 1;
    std::vector<std::size_t> S1;
    std::vector<std::size_t> S2;
};

struct ThresholdQuery {
    double delta = 0.1;  // target alignment defect, in (0, 1)
    double lambda = 1.0;
    std::size_t n = 1;
    std::size_t k = 1;
};

enum class StageKind { Recovery, Robust, OverlyPerturbed };

const char* stage_name(StageKind stage);

struct StageThresholds {
    double robust_lower = 0.0;
    double robust_upper = 0.0;
    bool window_nonempty = false;
};

// Draws X with rows sqrt(lambda) * u_i * v*^T + W_i where u ~ N(0, I_n) is
// drawn first and W ~ N(0, I_{n x d}) second, both from one seeded stream.
SampleMatrix sample_spiked(const SpikedModel& model, std::size_t n, std::uint64_t seed);

// The planted vector of a strong/weak split; unit norm by construction.
KSparseVector build_strong_weak_truth(const StrongWeakSpec& spec, std::size_t d);

// Exact covariance lambda * v* v*^T + I of the spiked model.
Covariance spiked_covariance_exact(double lambda, const KSparseVector& v_star);

// mu_n = sqrt(2) * Gamma((n+1)/2) / Gamma(n/2), the expected norm of a
// standard Gaussian n-vector; evaluated through log-gamma.
double expected_norm_factor(std::size_t n);

// Exact expectation of the feature-wise objective under N(0, Sigma) rows:
//   v' Sigma v - 2 (rho/n) |v|_1 sigma_v mu_n + (rho^2/n) |v|_1^2.
double population_featurewise_objective(const Covariance& sigma, const KSparseVector& v,
                                        double rho, std::size_t n);

// Margin surrogate sqrt(v' Sigma v) - (rho/sqrt(n)) |v|_1 (may be negative).
double simplified_population_objective(const Covariance& sigma, const KSparseVector& v,
                                       double rho, std::size_t n);

// One-sided truncated variance of N(0, sigma^2):
//   h(sigma) = integral_{x >= rho} (x - rho)^2 phi_sigma(x) dx,
// in closed form through erfc. Strictly increasing in sigma.
double truncated_variance_h(double sigma, double rho);

// d h / d sigma = sigma * erfc(rho / (sqrt(2) sigma)).
double truncated_variance_h_derivative(double sigma, double rho);

// Conservative perturbation level below which the margin-surrogate optimum
// stays (1 - delta)-aligned with the planted vector:
//   ((2 delta - delta^2) / (2 sqrt(6))) * lambda * sqrt(n / k).
double recovery_threshold(const ThresholdQuery& q);

// Order-level bounds of the partial-recovery window:
//   lower = sqrt(-3c^2 + 2c + 1) / (sqrt(1 + lambda(1-c)) + 1) * lambda * sqrt(n/k2)
//   upper = lambda c / (1 + sqrt(1 + lambda c)) * sqrt(n/k1).
StageThresholds stage_thresholds(double lambda, std::size_t n, double c, std::size_t k1,
                                 std::size_t k2);

// Classifies the population optimum by the structure of its maximizer. The
// candidate family mixes the strong and weak blocks at an angle theta; its
// boundary angles reproduce the single-block candidates, so the stage is read
// off the maximizing angle: interior -> Recovery (both blocks survive),
// boundary -> Robust (one block survives), and the null value 1 winning
// strictly -> OverlyPerturbed. Ties resolve toward the less perturbed stage.
StageKind stage_classify(double lambda, std::size_t n, double c, std::size_t k1,
                         std::size_t k2, double rho);

// Enumeration argmax of h(sqrt(v' Sigma v)) over unit k-sparse vectors,
// computed numerically per support (no monotonicity shortcut).
KSparseVector argmax_truncated_variance(const Covariance& sigma, std::size_t k,
                                        double rho);

// Enumeration argmax of the margin surrogate over unit k-sparse vectors.
KSparseVector argmax_simplified_objective(const Covariance& sigma, std::size_t k,
                                          double rho, std::size_t n);

}  // namespace rspca
