#include "rspca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rspca/combinatorics.hpp"
#include "rspca/rng.hpp"

namespace rspca {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

void validate_strong_weak(const StrongWeakSpec& spec) {
    if (!(spec.c > 0.5) || !(spec.c < 1.0)) {
        throw std::invalid_argument("strong/weak split requires c in (1/2, 1)");
    }
    if (spec.k1 < 1 || spec.k2 < 1) {
        throw std::invalid_argument("strong/weak split requires k1, k2 >= 1");
    }
}

// Fills S1/S2 with the defaults when unset and checks consistency.
void resolve_supports(const StrongWeakSpec& spec, std::size_t d,
                      std::vector<std::size_t>& s1, std::vector<std::size_t>& s2) {
    if (spec.k1 + spec.k2 > d) {
        throw std::invalid_argument("strong/weak split does not fit the dimension");
    }
    s1 = spec.S1;
    s2 = spec.S2;
    if (s1.empty()) {
        for (std::size_t i = 0; i < spec.k1; ++i) s1.push_back(i);
    }
    if (s2.empty()) {
        for (std::size_t i = 0; i < spec.k2; ++i) s2.push_back(spec.k1 + i);
    }
    if (s1.size() != spec.k1 || s2.size() != spec.k2) {
        throw std::invalid_argument("strong/weak index sets have wrong sizes");
    }
    std::vector<std::size_t> all = s1;
    all.insert(all.end(), s2.begin(), s2.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i] >= d) throw std::invalid_argument("strong/weak index out of range");
        if (i > 0 && all[i] == all[i - 1]) {
            throw std::invalid_argument("strong/weak index sets must be disjoint");
        }
    }
}

double quadratic_value(const Covariance& sigma, const Vector& dense) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sigma.d; ++i) {
        if (dense[i] == 0.0) continue;
        for (std::size_t j = 0; j < sigma.d; ++j) {
            if (dense[j] != 0.0) acc += dense[i] * sigma.at(i, j) * dense[j];
        }
    }
    return acc;
}

// Multistart projected gradient ascent of a smooth-enough objective over the
// unit sphere of a fixed support, used by the enumeration argmax operations.
// value(coords) must accept unit coords; grad(coords) returns the Euclidean
// gradient (the tangential projection happens here).
template <typename ValueFn, typename GradFn>
void sphere_multistart(std::size_t size, std::uint64_t seed, int starts,
                       const ValueFn& value, const GradFn& grad, Vector& best_coords,
                       double& best_value) {
    GaussianStream gauss(seed);
    for (int start = 0; start < starts; ++start) {
        Vector c(size);
        if (start < static_cast<int>(size)) {
            // Deterministic axis starts cover the coordinate directions.
            c.assign(size, 0.0);
            c[start] = 1.0;
        } else {
            for (double& x : c) x = gauss.next();
            double nrm = norm2(c);
            if (nrm < 1e-14) continue;
            for (double& x : c) x /= nrm;
        }
        double val = value(c);
        double step = 0.2;
        for (int it = 0; it < 600 && step > 1e-14; ++it) {
            Vector g = grad(c);
            double along = dot(g, c);
            for (std::size_t u = 0; u < size; ++u) g[u] -= along * c[u];
            if (norm2(g) <= 1e-11) break;
            Vector trial(size);
            for (std::size_t u = 0; u < size; ++u) trial[u] = c[u] + step * g[u];
            double tn = norm2(trial);
            for (double& x : trial) x /= tn;
            double tv = value(trial);
            if (tv > val) {
                c = trial;
                val = tv;
                step = std::min(0.5, step * 1.3);
            } else {
                step *= 0.5;
            }
        }
        if (val > best_value) {
            best_value = val;
            best_coords = c;
        }
    }
}

// Canonical sign: largest-magnitude coordinate positive.
void canonicalize_sign(Vector& values) {
    if (values.empty()) return;
    std::size_t arg = 0;
    for (std::size_t u = 1; u < values.size(); ++u) {
        if (std::abs(values[u]) > std::abs(values[arg]) + 1e-15) arg = u;
    }
    if (values[arg] < 0.0) {
        for (double& x : values) x = -x;
    }
}

template <typename SupportObjective>
KSparseVector enumeration_argmax(const Covariance& sigma, std::size_t k,
                                 const SupportObjective& objective_for) {
    if (k < 1 || k > sigma.d) {
        throw std::invalid_argument("enumeration argmax requires 1 <= k <= d");
    }
    if (binomial_capped(sigma.d, k, 2000000) >= 2000000) {
        throw std::invalid_argument("enumeration argmax: too many supports");
    }
    KSparseVector best;
    best.d = sigma.d;
    double best_value = -std::numeric_limits<double>::infinity();
    std::uint64_t ordinal = 0;

    for (std::size_t size = 1; size <= k; ++size) {
        std::vector<std::size_t> support = first_combination(size);
        do {
            ++ordinal;
            Vector coords;
            double value = -std::numeric_limits<double>::infinity();
            objective_for(support, 777 + 1000003ull * ordinal, coords, value);
            if (value > best_value) {
                best_value = value;
                best.support = support;
                best.values = coords;
            }
        } while (next_combination(support, sigma.d));
    }

    // Coordinates at the ascent's noise floor carry no objective mass but
    // would pollute the reported support; drop them and renormalize.
    KSparseVector cleaned;
    cleaned.d = best.d;
    for (std::size_t u = 0; u < best.support.size(); ++u) {
        if (std::abs(best.values[u]) > 1e-8) {
            cleaned.support.push_back(best.support[u]);
            cleaned.values.push_back(best.values[u]);
        }
    }
    double nrm = norm2(cleaned.values);
    if (!cleaned.values.empty() && nrm > 0.0) {
        for (double& x : cleaned.values) x /= nrm;
        best = std::move(cleaned);
    }
    canonicalize_sign(best.values);
    return best;
}

}  // namespace

const char* stage_name(StageKind stage) {
    switch (stage) {
        case StageKind::Recovery: return "Recovery";
        case StageKind::Robust: return "Robust";
        case StageKind::OverlyPerturbed: return "OverlyPerturbed";
    }
    return "unknown";
}

SampleMatrix sample_spiked(const SpikedModel& model, std::size_t n, std::uint64_t seed) {
    if (model.d == 0 || n == 0) {
        throw std::invalid_argument("sample_spiked requires d >= 1 and n >= 1");
    }
    if (model.lambda < 0.0) {
        throw std::invalid_argument("sample_spiked requires lambda >= 0");
    }
    Vector vstar = model.v_star.dense();
    if (vstar.size() != model.d) {
        throw std::invalid_argument("sample_spiked: truth dimension mismatch");
    }

    GaussianStream gauss(seed);
    Vector u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = gauss.next();

    SampleMatrix X;
    X.n = n;
    X.d = model.d;
    X.data.resize(n * model.d);
    const double root_lambda = std::sqrt(model.lambda);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < model.d; ++j) {
            X.data[i * model.d + j] = root_lambda * u[i] * vstar[j] + gauss.next();
        }
    }
    return X;
}

KSparseVector build_strong_weak_truth(const StrongWeakSpec& spec, std::size_t d) {
    validate_strong_weak(spec);
    std::vector<std::size_t> s1, s2;
    resolve_supports(spec, d, s1, s2);

    const double strong = std::sqrt(spec.c / static_cast<double>(spec.k1));
    const double weak = std::sqrt((1.0 - spec.c) / static_cast<double>(spec.k2));

    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t i : s1) entries.emplace_back(i, strong);
    for (std::size_t i : s2) entries.emplace_back(i, weak);
    std::sort(entries.begin(), entries.end());

    KSparseVector out;
    out.d = d;
    for (const auto& [idx, val] : entries) {
        out.support.push_back(idx);
        out.values.push_back(val);
    }
    return out;
}

Covariance spiked_covariance_exact(double lambda, const KSparseVector& v_star) {
    if (lambda < 0.0) {
        throw std::invalid_argument("spiked covariance requires lambda >= 0");
    }
    Vector dense = v_star.dense();
    Covariance sigma;
    sigma.d = v_star.d;
    sigma.entries.assign(sigma.d * sigma.d, 0.0);
    for (std::size_t i = 0; i < sigma.d; ++i) {
        for (std::size_t j = 0; j < sigma.d; ++j) {
            sigma.entries[i * sigma.d + j] =
                lambda * dense[i] * dense[j] + (i == j ? 1.0 : 0.0);
        }
    }
    return sigma;
}

double expected_norm_factor(std::size_t n) {
    if (n < 1) throw std::invalid_argument("expected_norm_factor requires n >= 1");
    const double half_n = 0.5 * static_cast<double>(n);
    return std::exp(0.5 * std::log(2.0) + std::lgamma(half_n + 0.5) -
                    std::lgamma(half_n));
}

double population_featurewise_objective(const Covariance& sigma, const KSparseVector& v,
                                        double rho, std::size_t n) {
    Vector dense = v.dense();
    double quad = quadratic_value(sigma, dense);
    double l1 = v.norm1();
    double sigma_v = std::sqrt(std::max(0.0, quad));
    const double nn = static_cast<double>(n);
    return quad - 2.0 * (rho / nn) * l1 * sigma_v * expected_norm_factor(n) +
           (rho * rho / nn) * l1 * l1;
}

double simplified_population_objective(const Covariance& sigma, const KSparseVector& v,
                                       double rho, std::size_t n) {
    Vector dense = v.dense();
    double quad = quadratic_value(sigma, dense);
    return std::sqrt(std::max(0.0, quad)) -
           (rho / std::sqrt(static_cast<double>(n))) * v.norm1();
}

double truncated_variance_h(double sigma, double rho) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("truncated_variance_h requires sigma > 0");
    }
    if (rho < 0.0) {
        throw std::invalid_argument("truncated_variance_h requires rho >= 0");
    }
    const double a = rho / (kSqrt2 * sigma);
    return 0.5 * (rho * rho + sigma * sigma) * std::erfc(a) -
           (rho * sigma / kSqrt2Pi) * std::exp(-rho * rho / (2.0 * sigma * sigma));
}

double truncated_variance_h_derivative(double sigma, double rho) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("truncated_variance_h requires sigma > 0");
    }
    return sigma * std::erfc(rho / (kSqrt2 * sigma));
}

double recovery_threshold(const ThresholdQuery& q) {
    if (!(q.delta > 0.0) || !(q.delta < 1.0)) {
        throw std::invalid_argument("recovery_threshold requires delta in (0, 1)");
    }
    if (!(q.lambda > 0.0) || q.n < 1 || q.k < 1) {
        throw std::invalid_argument("recovery_threshold requires positive parameters");
    }
    const double constant = (2.0 * q.delta - q.delta * q.delta) / (2.0 * std::sqrt(6.0));
    return constant * q.lambda *
           std::sqrt(static_cast<double>(q.n) / static_cast<double>(q.k));
}

StageThresholds stage_thresholds(double lambda, std::size_t n, double c, std::size_t k1,
                                 std::size_t k2) {
    if (!(c > 0.5) || !(c < 1.0)) {
        throw std::invalid_argument("stage_thresholds requires c in (1/2, 1)");
    }
    if (!(lambda > 0.0) || n < 1 || k1 < 1 || k2 < 1) {
        throw std::invalid_argument("stage_thresholds requires positive parameters");
    }
    const double nn = static_cast<double>(n);
    StageThresholds out;
    out.robust_lower = std::sqrt(-3.0 * c * c + 2.0 * c + 1.0) /
                       (std::sqrt(1.0 + lambda * (1.0 - c)) + 1.0) * lambda *
                       std::sqrt(nn / static_cast<double>(k2));
    out.robust_upper = lambda * c / (1.0 + std::sqrt(1.0 + lambda * c)) *
                       std::sqrt(nn / static_cast<double>(k1));
    out.window_nonempty = out.robust_lower < out.robust_upper;
    return out;
}

StageKind stage_classify(double lambda, std::size_t n, double c, std::size_t k1,
                         std::size_t k2, double rho) {
    if (!(c > 0.5) || !(c < 1.0)) {
        throw std::invalid_argument("stage_classify requires c in (1/2, 1)");
    }
    if (!(lambda > 0.0) || n < 1 || k1 < 1 || k2 < 1 || rho < 0.0) {
        throw std::invalid_argument("stage_classify requires positive parameters");
    }
    const double root_n = std::sqrt(static_cast<double>(n));
    const double rk1 = std::sqrt(static_cast<double>(k1));
    const double rk2 = std::sqrt(static_cast<double>(k2));
    const double sc = std::sqrt(c);
    const double sw = std::sqrt(1.0 - c);
    const double half_pi = 1.5707963267948966;

    // Value of the best unit vector mixing the strong and weak blocks at
    // angle theta (theta = 0 keeps only the strong block, pi/2 only the
    // weak one). The boundary values coincide with the single-block
    // candidates, so the stage cannot be read from a value comparison alone:
    // what matters is the structure of the maximizing angle.
    const auto mixed = [&](double th) {
        const double align = sc * std::cos(th) + sw * std::sin(th);
        return std::sqrt(1.0 + lambda * align * align) -
               (rho / root_n) * (rk1 * std::cos(th) + rk2 * std::sin(th));
    };

    // Deterministic grid pass followed by golden-section refinement.
    const int grid = 4096;
    double best_th = 0.0;
    double best_val = mixed(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double th = half_pi * static_cast<double>(i) / grid;
        const double val = mixed(th);
        if (val > best_val) {
            best_val = val;
            best_th = th;
        }
    }
    {
        double lo = std::max(0.0, best_th - half_pi / grid);
        double hi = std::min(half_pi, best_th + half_pi / grid);
        const double invphi = 0.6180339887498949;
        double x1 = hi - invphi * (hi - lo);
        double x2 = lo + invphi * (hi - lo);
        double f1 = mixed(x1);
        double f2 = mixed(x2);
        for (int it = 0; it < 90; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + invphi * (hi - lo);
                f2 = mixed(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - invphi * (hi - lo);
                f1 = mixed(x1);
            }
        }
        const double th = 0.5 * (lo + hi);
        const double val = mixed(th);
        if (val > best_val) {
            best_val = val;
            best_th = th;
        }
    }

    // Null candidate wins only on strict improvement (ties resolve toward
    // the less perturbed stage).
    if (best_val < 1.0) return StageKind::OverlyPerturbed;

    // Interior mixing angle: both blocks survive. Boundary angle: a single
    // block survives (strong at 0, weak at pi/2), the robust behavior.
    const double edge = 1e-7;
    if (best_th > edge && best_th < half_pi - edge) return StageKind::Recovery;
    return StageKind::Robust;
}

KSparseVector argmax_truncated_variance(const Covariance& sigma, std::size_t k,
                                        double rho) {
    return enumeration_argmax(
        sigma, k,
        [&](const std::vector<std::size_t>& support, std::uint64_t seed, Vector& coords,
            double& value) {
            Covariance sub = principal_submatrix(sigma, support);
            const std::size_t s = support.size();
            auto val = [&](const Vector& c) {
                double quad = 0.0;
                for (std::size_t i = 0; i < s; ++i) {
                    for (std::size_t j = 0; j < s; ++j) quad += c[i] * sub.at(i, j) * c[j];
                }
                return truncated_variance_h(std::sqrt(std::max(1e-300, quad)), rho);
            };
            auto grad = [&](const Vector& c) {
                double quad = 0.0;
                Vector sv(s, 0.0);
                for (std::size_t i = 0; i < s; ++i) {
                    for (std::size_t j = 0; j < s; ++j) sv[i] += sub.at(i, j) * c[j];
                    quad += c[i] * sv[i];
                }
                double sig = std::sqrt(std::max(1e-300, quad));
                double scale = truncated_variance_h_derivative(sig, rho) / sig;
                for (double& x : sv) x *= scale;
                return sv;
            };
            value = -std::numeric_limits<double>::infinity();
            sphere_multistart(s, seed, 8 + static_cast<int>(s), val, grad, coords, value);
        });
}

KSparseVector argmax_simplified_objective(const Covariance& sigma, std::size_t k,
                                          double rho, std::size_t n) {
    const double penalty = rho / std::sqrt(static_cast<double>(n));
    return enumeration_argmax(
        sigma, k,
        [&](const std::vector<std::size_t>& support, std::uint64_t seed, Vector& coords,
            double& value) {
            Covariance sub = principal_submatrix(sigma, support);
            const std::size_t s = support.size();
            auto val = [&](const Vector& c) {
                double quad = 0.0;
                for (std::size_t i = 0; i < s; ++i) {
                    for (std::size_t j = 0; j < s; ++j) quad += c[i] * sub.at(i, j) * c[j];
                }
                return std::sqrt(std::max(0.0, quad)) - penalty * norm1(c);
            };
            auto grad = [&](const Vector& c) {
                double quad = 0.0;
                Vector sv(s, 0.0);
                for (std::size_t i = 0; i < s; ++i) {
                    for (std::size_t j = 0; j < s; ++j) sv[i] += sub.at(i, j) * c[j];
                    quad += c[i] * sv[i];
                }
                double sig = std::sqrt(std::max(1e-300, quad));
                for (std::size_t i = 0; i < s; ++i) {
                    double sgn = (c[i] > 0.0) ? 1.0 : (c[i] < 0.0 ? -1.0 : 0.0);
                    sv[i] = sv[i] / sig - penalty * sgn;
                }
                return sv;
            };
            value = -std::numeric_limits<double>::infinity();
            sphere_multistart(s, seed, 16 + static_cast<int>(s), val, grad, coords,
                              value);
        });
}

}  // namespace rspca
