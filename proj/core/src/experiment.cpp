#include "rspca/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rspca/heuristics.hpp"
#include "rspca/micp.hpp"
#include "rspca/perturb.hpp"
#include "rspca/solver.hpp"

namespace rspca {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': bad real value '" + value +
                                 "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long x = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': bad integer value '" +
                                 value + "'");
    }
}

std::string format_g9(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

// Lifts a vector on the reduced coordinate set back into the full space.
KSparseVector embed_support(const KSparseVector& reduced,
                            const std::vector<std::size_t>& selection, std::size_t d) {
    KSparseVector out;
    out.d = d;
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t t = 0; t < reduced.support.size(); ++t) {
        entries.emplace_back(selection[reduced.support[t]], reduced.values[t]);
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& [idx, val] : entries) {
        out.support.push_back(idx);
        out.values.push_back(val);
    }
    return out;
}

double restricted_cosine(const Vector& a, const Vector& b,
                         const std::vector<std::size_t>& idx) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i : idx) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa <= 0.0 || bb <= 0.0) return 0.0;
    return std::abs(ab) / (std::sqrt(aa) * std::sqrt(bb));
}

double overlap_rate(const std::vector<std::size_t>& support,
                    const std::vector<std::size_t>& target, std::size_t denom) {
    if (denom == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i : support) {
        if (std::binary_search(target.begin(), target.end(), i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(denom);
}

}  // namespace

const char* method_name(ExperimentMethod method) {
    switch (method) {
        case ExperimentMethod::Mip: return "MIP";
        case ExperimentMethod::MipRankR: return "MIP-r";
        case ExperimentMethod::Spca: return "spca";
        case ExperimentMethod::Ppm: return "PPM";
    }
    return "unknown";
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    bool saw_methods = false;

    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                     ": empty key or value");
        }

        if (key == "d") {
            cfg.d = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "n") {
            cfg.n = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "k") {
            cfg.k = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "lambda") {
            cfg.lambda = parse_real(key, value);
        } else if (key == "truth") {
            if (value == "spiked") {
                cfg.truth_mode = TruthMode::Spiked;
            } else if (value == "strongweak") {
                cfg.truth_mode = TruthMode::StrongWeak;
            } else {
                throw std::invalid_argument("config key 'truth': expected spiked|strongweak");
            }
        } else if (key == "c") {
            cfg.c = parse_real(key, value);
        } else if (key == "k1") {
            cfg.k1 = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "k2") {
            cfg.k2 = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "rho_bar_grid") {
            cfg.rho_bar_grid.clear();
            for (const std::string& part : split_commas(value)) {
                cfg.rho_bar_grid.push_back(parse_real(key, part));
            }
        } else if (key == "d_bar") {
            cfg.d_bar = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "N") {
            cfg.N = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "r") {
            cfg.r = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "trials") {
            cfg.trials = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "seed_base") {
            cfg.seed_base = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "methods") {
            cfg.methods.clear();
            saw_methods = true;
            for (const std::string& part : split_commas(value)) {
                if (part == "MIP") {
                    cfg.methods.push_back(ExperimentMethod::Mip);
                } else if (part == "MIP-r") {
                    cfg.methods.push_back(ExperimentMethod::MipRankR);
                } else if (part == "spca") {
                    cfg.methods.push_back(ExperimentMethod::Spca);
                } else if (part == "PPM") {
                    cfg.methods.push_back(ExperimentMethod::Ppm);
                } else {
                    throw std::invalid_argument("config key 'methods': unknown method '" +
                                             part + "'");
                }
            }
        } else if (key == "time_limit_s") {
            cfg.time_limit_s = parse_real(key, value);
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }

    // Canonical method order, duplicates removed.
    std::vector<ExperimentMethod> ordered;
    for (ExperimentMethod m : {ExperimentMethod::Mip, ExperimentMethod::MipRankR,
                               ExperimentMethod::Spca, ExperimentMethod::Ppm}) {
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end()) {
            ordered.push_back(m);
        }
    }
    cfg.methods = ordered;
    if (saw_methods && cfg.methods.empty()) {
        throw std::invalid_argument("config key 'methods': at least one method required");
    }

    if (cfg.k < 1 || cfg.k > cfg.d_bar || cfg.d_bar > cfg.d) {
        throw std::invalid_argument("config requires 1 <= k <= d_bar <= d");
    }
    if (cfg.trials < 1) throw std::invalid_argument("config requires trials >= 1");
    if (cfg.N < 1) throw std::invalid_argument("config requires N >= 1");
    if (cfg.r < 1 || cfg.r > cfg.d_bar) {
        throw std::invalid_argument("config requires 1 <= r <= d_bar");
    }
    if (cfg.rho_bar_grid.empty()) {
        throw std::invalid_argument("config requires a non-empty rho_bar_grid");
    }
    if (cfg.truth_mode == TruthMode::StrongWeak && cfg.k1 + cfg.k2 > cfg.d) {
        throw std::invalid_argument("config strong/weak truth does not fit d");
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str());
}

MetricsFragment compute_metrics(const KSparseVector& v_hat, const KSparseVector& v_star,
                                const StrongWeakSpec* strong_weak, double lb,
                                double ub) {
    if (v_star.support.empty()) {
        throw std::invalid_argument("compute_metrics requires a nonzero truth vector");
    }
    MetricsFragment out;
    out.gap = (lb > 0.0) ? (ub - lb) / lb : std::numeric_limits<double>::infinity();

    Vector a = v_hat.dense();
    Vector b = v_star.dense();
    double ab = std::abs(dot(a, b));
    double na = norm2(a), nb = norm2(b);
    out.ang = (na > 0.0 && nb > 0.0) ? ab / (na * nb) : 0.0;
    out.rate_supp = overlap_rate(v_hat.support, v_star.support,
                                 std::max<std::size_t>(1, v_star.support.size()));

    if (strong_weak != nullptr) {
        std::vector<std::size_t> s1 = strong_weak->S1, s2 = strong_weak->S2;
        if (s1.empty()) {
            for (std::size_t i = 0; i < strong_weak->k1; ++i) s1.push_back(i);
        }
        if (s2.empty()) {
            for (std::size_t i = 0; i < strong_weak->k2; ++i) {
                s2.push_back(strong_weak->k1 + i);
            }
        }
        std::sort(s1.begin(), s1.end());
        std::sort(s2.begin(), s2.end());
        out.ang_s = restricted_cosine(a, b, s1);
        out.ang_w = restricted_cosine(a, b, s2);
        out.rate_s = overlap_rate(v_hat.support, s1, strong_weak->k1);
        out.rate_w = overlap_rate(v_hat.support, s2, strong_weak->k2);
        out.restricted_defined = true;
    }
    return out;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
    std::vector<MetricsRow> rows;
    const double rho_scale =
        std::sqrt(static_cast<double>(cfg.n) / static_cast<double>(cfg.k));

    // Truth vector (shared across trials; only the noise varies).
    KSparseVector v_star;
    StrongWeakSpec sw;
    const StrongWeakSpec* sw_ptr = nullptr;
    if (cfg.truth_mode == TruthMode::StrongWeak) {
        sw.c = cfg.c;
        sw.k1 = cfg.k1;
        sw.k2 = cfg.k2;
        v_star = build_strong_weak_truth(sw, cfg.d);
        sw_ptr = &sw;
    } else {
        v_star.d = cfg.d;
        const double entry = 1.0 / std::sqrt(static_cast<double>(cfg.k));
        for (std::size_t i = 0; i < cfg.k; ++i) {
            v_star.support.push_back(i);
            v_star.values.push_back(entry);
        }
    }

    SpikedModel model;
    model.d = cfg.d;
    model.lambda = cfg.lambda;
    model.v_star = v_star;

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t seed = cfg.seed_base + trial;
        SampleMatrix X = sample_spiked(model, cfg.n, seed);
        Covariance sigma = covariance_from_samples(X);
        SubmatrixSelection sel = submatrix_init(sigma, cfg.k, cfg.d_bar, 100);
        SampleMatrix Xbar = restrict_columns(X, sel.support);
        EigenBasis eigen_bar = symmetric_eigendecomposition(sel.S_sub);

        // Vanilla sparse-PCA value on the reduced block: exact by support
        // enumeration; serves as the heuristics' certified upper bound and
        // as the solver warm start.
        SparsePcaValue spca = sparse_pca_exact(sel.S_sub, cfg.k);
        const KSparseVector& spca_v = spca.v;
        const double spca_value = spca.value;

        for (double rho_bar : cfg.rho_bar_grid) {
            const double rho = rho_bar * rho_scale;
            std::vector<MetricsRow> cell;

            for (ExperimentMethod method : cfg.methods) {
                MetricsRow row;
                row.trial = trial;
                row.seed = seed;
                row.rho_bar = rho_bar;
                row.rho = rho;
                row.method = method_name(method);

                KSparseVector v_hat_reduced;
                if (method == ExperimentMethod::Mip ||
                    method == ExperimentMethod::MipRankR) {
                    MicpModel m =
                        (method == ExperimentMethod::Mip)
                            ? build_featurewise_full(Xbar, eigen_bar, cfg.k, rho,
                                                     static_cast<int>(cfg.N))
                            : build_featurewise_rank_r(Xbar, eigen_bar, cfg.k, rho,
                                                       static_cast<int>(cfg.N), cfg.r);
                    SolverOptions opts;
                    opts.mode = SolveMode::EnumerateSupports;
                    opts.seed = seed;
                    if (cfg.time_limit_s > 0.0) {
                        opts.time_limit_s = cfg.time_limit_s;
                        opts.timing = true;
                    } else {
                        opts.timing = false;
                    }
                    SolveReport report = solve(m, opts, &spca_v);
                    row.objective = report.lb;
                    row.lb = report.lb;
                    row.ub = report.ub;
                    row.nodes = report.nodes;
                    row.wall_ms = report.wall_ms;
                    row.status = status_name(report.status);
                    v_hat_reduced = report.incumbent;
                } else {
                    if (method == ExperimentMethod::Spca) {
                        v_hat_reduced = spca_v;
                    } else {
                        PpmOptions popts;
                        popts.seed = seed;
                        PpmResult pr = ppm(Xbar, cfg.k, rho, popts);
                        v_hat_reduced = pr.v;
                    }
                    FeaturewiseValue fv = objective_featurewise(Xbar, v_hat_reduced, rho);
                    row.objective = fv.value;
                    row.lb = fv.value;
                    row.ub = spca_value;
                    row.nodes = 0;
                    row.wall_ms = 0;
                    row.status = "Heuristic";
                }

                KSparseVector v_hat = embed_support(v_hat_reduced, sel.support, cfg.d);
                row.metrics = compute_metrics(v_hat, v_star, sw_ptr, row.lb, row.ub);
                cell.push_back(std::move(row));
            }

            // A "best" row summarizes each cell, but only when there is an
            // actual comparison to make; a single-method sweep stays one row
            // per cell.
            if (cell.size() >= 2) {
                std::size_t best = 0;
                for (std::size_t i = 1; i < cell.size(); ++i) {
                    if (cell[i].objective > cell[best].objective) best = i;
                }
                MetricsRow best_row = cell[best];
                best_row.method = "best";
                cell.push_back(std::move(best_row));
            }
            for (MetricsRow& row : cell) rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out =
        "trial,seed,rho_bar,rho,method,objective,lb,ub,gap,ang,ang_s,ang_w,"
        "rate_supp,rate_s,rate_w,nodes,wall_ms,status\n";
    for (const MetricsRow& row : rows) {
        out += std::to_string(row.trial);
        out += ',';
        out += std::to_string(row.seed);
        out += ',';
        out += format_g9(row.rho_bar);
        out += ',';
        out += format_g9(row.rho);
        out += ',';
        out += row.method;
        out += ',';
        out += format_g9(row.objective);
        out += ',';
        out += format_g9(row.lb);
        out += ',';
        out += format_g9(row.ub);
        out += ',';
        out += format_g9(row.metrics.gap);
        out += ',';
        out += format_g9(row.metrics.ang);
        out += ',';
        out += format_g9(row.metrics.ang_s);
        out += ',';
        out += format_g9(row.metrics.ang_w);
        out += ',';
        out += format_g9(row.metrics.rate_supp);
        out += ',';
        out += format_g9(row.metrics.rate_s);
        out += ',';
        out += format_g9(row.metrics.rate_w);
        out += ',';
        out += std::to_string(row.nodes);
        out += ',';
        out += std::to_string(row.wall_ms);
        out += ',';
        out += row.status;
        out += '\n';
    }
    return out;
}

void write_experiment_csv(const ExperimentConfig& cfg, const std::string& out_path) {
    std::vector<MetricsRow> rows = run_experiment(cfg);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << metrics_to_csv(rows);
    if (!out) throw std::runtime_error("failed writing output file: " + out_path);
}

}  // namespace rspca
