// Closed-form per-marker evidence models: the beta-binomial Bayes factor for
// binary markers and the shared-kernel Dirichlet-multinomial model for
// continuous [0,1] data.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "genescreen/core_types.hpp"
#include "genescreen/rng.hpp"

namespace genescreen {

struct BinaryCounts {
    std::int64_t s0 = 0;
    std::int64_t s1 = 0;
    std::int64_t n0 = 0;
    std::int64_t n1 = 0;
};

inline double log_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// log of beta(1+s, 1+N-s) / [beta(1+s0, 1+n0-s0) beta(1+s1, 1+n1-s1)],
// the marginal-likelihood ratio of the null over the alternative under
// independent uniform priors on the group success probabilities.
inline double log_bayes_factor_binary(const BinaryCounts& c) {
    const double s = static_cast<double>(c.s0 + c.s1);
    const double n = static_cast<double>(c.n0 + c.n1);
    return log_beta_fn(1.0 + s, 1.0 + n - s) -
           log_beta_fn(1.0 + static_cast<double>(c.s0), 1.0 + static_cast<double>(c.n0 - c.s0)) -
           log_beta_fn(1.0 + static_cast<double>(c.s1), 1.0 + static_cast<double>(c.n1 - c.s1));
}

inline double log_multivariate_beta(std::span<const double> a) {
    double lg = 0.0;
    double sum = 0.0;
    for (double x : a) {
        lg += std::lgamma(x);
        sum += x;
    }
    return lg - std::lgamma(sum);
}

// log of beta(lambda) beta(n+lambda) / [beta(n0+lambda) beta(n1+lambda)]
// with multivariate beta functions and n = n0 + n1 entrywise.
inline double log_dm_marginal_ratio(std::span<const std::int64_t> counts0,
                                    std::span<const std::int64_t> counts1,
                                    std::span<const double> lambda) {
    const std::size_t k = lambda.size();
    if (counts0.size() != k || counts1.size() != k) {
        throw data_error("DimensionMismatch", "count vectors and lambda differ in length");
    }
    double lg = 0.0;
    double sum_l = 0.0, sum_n = 0.0, sum_n0 = 0.0, sum_n1 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double l = lambda[i];
        const double a0 = static_cast<double>(counts0[i]);
        const double a1 = static_cast<double>(counts1[i]);
        lg += std::lgamma(l) + std::lgamma(a0 + a1 + l) - std::lgamma(a0 + l) - std::lgamma(a1 + l);
        sum_l += l;
        sum_n += a0 + a1 + l;
        sum_n0 += a0 + l;
        sum_n1 += a1 + l;
    }
    lg += -std::lgamma(sum_l) - std::lgamma(sum_n) + std::lgamma(sum_n0) + std::lgamma(sum_n1);
    return lg;
}

// p * r / (p * r + 1 - p) where r = exp(log_ratio), evaluated stably.
inline double null_posterior_prob(double p_g, double log_ratio) {
    if (p_g >= 1.0) return 1.0;
    if (p_g <= 0.0) return 0.0;
    // 1 / (1 + exp(-(log_ratio + logit(p_g))))
    const double z = log_ratio + std::log(p_g) - std::log1p(-p_g);
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Shared-kernel model for continuous [0,1] data.
// ---------------------------------------------------------------------------

struct KernelDictionary {
    std::vector<double> mu;      // K means in [0,1]
    std::vector<double> sigma;   // K positive scales
    std::vector<double> lambda;  // K positive Dirichlet hyperparameters

    std::size_t size() const { return mu.size(); }

    void check() const {
        if (size() < 2 || size() > 64 || sigma.size() != size() || lambda.size() != size()) {
            throw data_error("DimensionMismatch",
                             "kernel dictionary needs 2 <= K <= 64 aligned vectors");
        }
        for (std::size_t k = 0; k < size(); ++k) {
            if (!(mu[k] >= 0.0 && mu[k] <= 1.0) || !(sigma[k] > 0.0) || !(lambda[k] > 0.0)) {
                throw data_error("ValueOutOfRange", "kernel parameters out of range");
            }
        }
    }
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double truncnorm_log_density(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    const double log_phi = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
    const double mass = normal_cdf((1.0 - mu) / sigma) - normal_cdf((0.0 - mu) / sigma);
    return log_phi - std::log(sigma) - std::log(mass);
}

// Precomputed density constants: f_k(x) = amp[k] * exp(curv[k] * (x - mu[k])^2).
// The truncation normalizers dominate step-1 cost at genome scale, so they are
// folded in once per dictionary.
struct KernelDensityTable {
    std::vector<double> mu;
    std::vector<double> amp;
    std::vector<double> curv;

    explicit KernelDensityTable(const KernelDictionary& dict) {
        const std::size_t k = dict.size();
        mu = dict.mu;
        amp.resize(k);
        curv.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            const double s = dict.sigma[i];
            const double mass = normal_cdf((1.0 - mu[i]) / s) - normal_cdf((0.0 - mu[i]) / s);
            amp[i] = 1.0 / (s * std::sqrt(2.0 * M_PI) * mass);
            curv[i] = -0.5 / (s * s);
        }
    }

    double density(double x, std::size_t k) const {
        const double d = x - mu[k];
        return amp[k] * std::exp(curv[k] * d * d);
    }
};

// Draws the generating kernel for each observation of one marker and tallies
// per-group counts.  `values` and `group_labels` are the marker's row and the
// sample labels; weights are the current per-group mixture weights.
inline void sample_kernel_assignments(std::span<const double> values,
                                      std::span<const std::uint8_t> group_labels,
                                      std::span<const double> weights0,
                                      std::span<const double> weights1,
                                      const KernelDensityTable& table, Rng& rng,
                                      std::span<std::int64_t> counts0,
                                      std::span<std::int64_t> counts1) {
    const std::size_t kk = table.mu.size();
    std::fill(counts0.begin(), counts0.end(), 0);
    std::fill(counts1.begin(), counts1.end(), 0);
    double w[64];
    for (std::size_t n = 0; n < values.size(); ++n) {
        const bool g1 = group_labels[n] != 0;
        const std::span<const double> pi = g1 ? weights1 : weights0;
        const double x = values[n];
        double total = 0.0;
        for (std::size_t k = 0; k < kk; ++k) {
            const double d = x - table.mu[k];
            w[k] = pi[k] * table.amp[k] * std::exp(table.curv[k] * d * d);
            total += w[k];
        }
        double u = rng.uniform() * total;
        std::size_t pick = kk - 1;
        for (std::size_t k = 0; k + 1 < kk; ++k) {
            u -= w[k];
            if (u < 0.0) {
                pick = k;
                break;
            }
        }
        (g1 ? counts1 : counts0)[pick] += 1;
    }
}

// Draws mixture weights for one marker.  Under a null designation both groups
// share a single Dirichlet(lambda + n0 + n1) draw; otherwise the groups draw
// independently.
inline void sample_mixture_weights(std::span<const std::int64_t> counts0,
                                   std::span<const std::int64_t> counts1,
                                   std::span<const double> lambda, bool is_null, Rng& rng,
                                   std::span<double> weights0, std::span<double> weights1) {
    const std::size_t k = lambda.size();
    std::vector<double> alpha(k);
    if (is_null) {
        for (std::size_t i = 0; i < k; ++i) {
            alpha[i] = lambda[i] + static_cast<double>(counts0[i] + counts1[i]);
        }
        rng.dirichlet(alpha, weights0);
        std::copy(weights0.begin(), weights0.end(), weights1.begin());
    } else {
        for (std::size_t i = 0; i < k; ++i) alpha[i] = lambda[i] + static_cast<double>(counts0[i]);
        rng.dirichlet(alpha, weights0);
        for (std::size_t i = 0; i < k; ++i) alpha[i] = lambda[i] + static_cast<double>(counts1[i]);
        rng.dirichlet(alpha, weights1);
    }
}

// Grid-based dictionary fitter: K means equally spaced over [0,1], one common
// sigma from pooled within-site residual spread, symmetric lambda.
inline KernelDictionary fit_kernel_dictionary(const Dataset& data, std::size_t k,
                                              double lambda_total_mass = 1.0) {
    if (data.kind != DataKind::Continuous01) {
        throw data_error("ValueOutOfRange", "kernel dictionaries require continuous data");
    }
    std::set<double> distinct;
    for (double x : data.values) {
        distinct.insert(x);
        if (distinct.size() >= k) break;
    }
    if (distinct.size() < k) {
        throw data_error("InsufficientData",
                         "fewer than K distinct values in the dataset");
    }
    KernelDictionary dict;
    dict.mu.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        dict.mu[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    }
    // Pooled within-site residual standard deviation.
    double ss = 0.0;
    std::size_t dof = 0;
    for (std::size_t m = 0; m < data.n_markers; ++m) {
        double mean = 0.0;
        for (std::size_t n = 0; n < data.n_samples; ++n) mean += data.value(m, n);
        mean /= static_cast<double>(data.n_samples);
        for (std::size_t n = 0; n < data.n_samples; ++n) {
            const double d = data.value(m, n) - mean;
            ss += d * d;
        }
        dof += data.n_samples > 1 ? data.n_samples - 1 : 0;
    }
    double sigma = dof > 0 ? std::sqrt(ss / static_cast<double>(dof)) : 0.1;
    sigma = std::max(sigma, 1e-3);
    dict.sigma.assign(k, sigma);
    dict.lambda.assign(k, lambda_total_mass / static_cast<double>(k));
    dict.check();
    return dict;
}

}  // namespace genescreen
