// Truncated stick-breaking Dirichlet-process prior over gene-level null
// probabilities, with its three blocked Gibbs updates: cluster allocation,
// stick weights, and atom draws.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "genescreen/core_types.hpp"
#include "genescreen/rng.hpp"

namespace genescreen {

struct DpConfig {
    double alpha = 1.0;  // DP concentration
    double a = 1.0;      // base Beta shape
    double b = 1.0;
    std::size_t truncation = 50;  // H

    void check() const {
        if (!(alpha > 0.0) || !(a > 0.0) || !(b > 0.0) || truncation < 1) {
            throw data_error("ValueOutOfRange", "DP config requires alpha, a, b > 0 and H >= 1");
        }
    }
};

inline constexpr double kThetaClamp = 1e-12;

struct GeneNullCounts {
    std::vector<std::size_t> markers;  // M_g per gene
    std::vector<std::size_t> nulls;    // S_g per gene
};

struct DpPriorState {
    std::vector<double> theta;                 // H atoms in (0,1)
    std::vector<double> v;                     // H stick fractions, v[H-1] = 1
    std::vector<double> pi;                    // H weights summing to 1
    std::vector<std::size_t> cluster_of_gene;  // G indices in {0..H-1}

    std::size_t truncation() const { return theta.size(); }

    void recompute_weights() {
        double remaining = 1.0;
        for (std::size_t h = 0; h < v.size(); ++h) {
            pi[h] = v[h] * remaining;
            remaining *= 1.0 - v[h];
        }
        // Renormalize away accumulated rounding so the simplex invariant is
        // exact to 1e-12.
        double total = 0.0;
        for (double w : pi) total += w;
        for (double& w : pi) w /= total;
    }
};

// Over-dispersed initialization: atoms from the base, sticks from the prior,
// allocations uniform.
inline DpPriorState init_dp_state(const DpConfig& cfg, std::size_t n_genes, Rng& rng) {
    cfg.check();
    DpPriorState state;
    const std::size_t h = cfg.truncation;
    state.theta.resize(h);
    state.v.resize(h);
    state.pi.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        state.theta[i] =
            std::clamp(rng.beta(cfg.a, cfg.b), kThetaClamp, 1.0 - kThetaClamp);
        state.v[i] = rng.beta(1.0, cfg.alpha);
    }
    state.v[h - 1] = 1.0;
    state.recompute_weights();
    state.cluster_of_gene.resize(n_genes);
    for (std::size_t g = 0; g < n_genes; ++g) {
        state.cluster_of_gene[g] = static_cast<std::size_t>(rng.uniform_index(h));
    }
    return state;
}

// Step 2: C_g ~ Categorical over h with weight pi_h theta_h^{S_g}
// (1-theta_h)^{M_g - S_g}, computed in log space.  `gene_rng` yields the
// per-gene substream, so allocation draws depend only on a gene's own counts
// and stream key.
template <typename GeneRngFn>
void sample_allocations(DpPriorState& state, const GeneNullCounts& counts, GeneRngFn&& gene_rng) {
    const std::size_t h = state.truncation();
    std::vector<double> log_pi(h), log_theta(h), log_1m_theta(h), logw(h), scratch;
    for (std::size_t i = 0; i < h; ++i) {
        log_pi[i] = std::log(state.pi[i]);
        log_theta[i] = std::log(state.theta[i]);
        log_1m_theta[i] = std::log1p(-state.theta[i]);
    }
    for (std::size_t g = 0; g < state.cluster_of_gene.size(); ++g) {
        const auto s_g = static_cast<double>(counts.nulls[g]);
        const auto rest = static_cast<double>(counts.markers[g] - counts.nulls[g]);
        for (std::size_t i = 0; i < h; ++i) {
            logw[i] = log_pi[i] + s_g * log_theta[i] + rest * log_1m_theta[i];
        }
        Rng& rng = gene_rng(g);
        state.cluster_of_gene[g] = rng.categorical_log(logw, scratch);
    }
}

// Step 3: V_h ~ Beta(1 + #{C_g = h}, alpha + #{C_g > h}), V_H = 1, then the
// stick-breaking products.
inline void sample_stick_weights(DpPriorState& state, double alpha, Rng& rng) {
    const std::size_t h = state.truncation();
    std::vector<std::size_t> occupancy(h, 0);
    for (std::size_t c : state.cluster_of_gene) occupancy[c] += 1;
    std::size_t greater = state.cluster_of_gene.size();
    for (std::size_t i = 0; i + 1 < h; ++i) {
        greater -= occupancy[i];
        state.v[i] = rng.beta(1.0 + static_cast<double>(occupancy[i]),
                              alpha + static_cast<double>(greater));
    }
    state.v[h - 1] = 1.0;
    state.recompute_weights();
}

// Step 4: theta_h ~ Beta(a + S~_h, b + M~_h - S~_h) aggregating counts over
// the genes in cluster h; returns p_g = theta_{C_g}.
inline void sample_atoms(DpPriorState& state, const GeneNullCounts& counts, const DpConfig& cfg,
                         Rng& rng, std::span<double> gene_prob) {
    const std::size_t h = state.truncation();
    std::vector<double> s_tilde(h, 0.0), m_tilde(h, 0.0);
    for (std::size_t g = 0; g < state.cluster_of_gene.size(); ++g) {
        const std::size_t c = state.cluster_of_gene[g];
        s_tilde[c] += static_cast<double>(counts.nulls[g]);
        m_tilde[c] += static_cast<double>(counts.markers[g]);
    }
    for (std::size_t i = 0; i < h; ++i) {
        const double draw = rng.beta(cfg.a + s_tilde[i], cfg.b + m_tilde[i] - s_tilde[i]);
        state.theta[i] = std::clamp(draw, kThetaClamp, 1.0 - kThetaClamp);
    }
    for (std::size_t g = 0; g < state.cluster_of_gene.size(); ++g) {
        gene_prob[g] = state.theta[state.cluster_of_gene[g]];
    }
}

// Expected number of associated (non-null) markers under the base measure:
// M * (1 - a / (a + b)).
inline double prior_expected_associated(const DpConfig& cfg, std::size_t n_markers) {
    return static_cast<double>(n_markers) * (1.0 - cfg.a / (cfg.a + cfg.b));
}

}  // namespace genescreen
