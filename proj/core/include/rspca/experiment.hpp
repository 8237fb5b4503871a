#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rspca/linalg.hpp"
#include "rspca/stats.hpp"

namespace rspca {

// ============================================================================
// Experiment sweep: spiked data -> submatrix reduction -> per-method rows
// ============================================================================

enum class TruthMode { Spiked, StrongWeak };

// Canonical method order; rows are always emitted in this order.
enum class ExperimentMethod { Mip, MipRankR, Spca, Ppm };

const char* method_name(ExperimentMethod method);

struct ExperimentConfig {
    std::size_t d = 100;
    std::size_t n = 500;
    std::size_t k = 5;
    double lambda = 3.0;
    TruthMode truth_mode = TruthMode::Spiked;
    double c = 0.8;        // strong/weak split, used when truth_mode = StrongWeak
    std::size_t k1 = 1;
    std::size_t k2 = 4;
    std::vector<double> rho_bar_grid = {0.0};
    std::size_t d_bar = 15;
    std::size_t N = 3;
    std::size_t r = 3;
    std::size_t trials = 1;
    std::uint64_t seed_base = 0;
    std::vector<ExperimentMethod> methods = {ExperimentMethod::Mip,
                                             ExperimentMethod::MipRankR,
                                             ExperimentMethod::Spca,
                                             ExperimentMethod::Ppm};
    // 0 disables the wall clock entirely (deterministic output); positive
    // values bound each exact solve and imply timed runs.
    double time_limit_s = 0.0;
};

// Alignment and support-recovery metrics of a candidate against the truth.
struct MetricsFragment {
    double gap = 0.0;  // (ub - lb) / lb; +infinity when lb <= 0
    double ang = 0.0;
    double ang_s = 0.0;
    double ang_w = 0.0;
    double rate_supp = 0.0;
    double rate_s = 0.0;
    double rate_w = 0.0;
    bool restricted_defined = false;  // false when no strong/weak split applies
};

struct MetricsRow {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double rho_bar = 0.0;
    double rho = 0.0;
    std::string method;
    double objective = 0.0;
    double lb = 0.0;
    double ub = 0.0;
    MetricsFragment metrics;
    long nodes = 0;
    long wall_ms = 0;
    std::string status;
};

// Parses the `key = value` config grammar ('#' comments, comma-separated
// arrays); unknown keys and malformed values throw.
ExperimentConfig parse_experiment_config(const std::string& text);

ExperimentConfig load_experiment_config(const std::string& path);

MetricsFragment compute_metrics(const KSparseVector& v_hat, const KSparseVector& v_star,
                                const StrongWeakSpec* strong_weak, double lb, double ub);

// Runs the full sweep and returns all rows in deterministic order
// (trial, rho_bar, method, then the per-cell "best" row).
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

// Renders rows as CSV: fixed header, 9 significant digits, "inf" sentinel
// for undefined gaps, LF line endings.
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

void write_experiment_csv(const ExperimentConfig& cfg, const std::string& out_path);

}  // namespace rspca
