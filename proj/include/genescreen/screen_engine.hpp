// Full Gibbs sweeps combining the per-marker evidence models with the
// gene-level prior updates, the four estimation modes, posterior summaries,
// and the cross-validation KL diagnostic.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "genescreen/core_types.hpp"
#include "genescreen/dp_prior.hpp"
#include "genescreen/marker_models.hpp"
#include "genescreen/parallel.hpp"
#include "genescreen/rng.hpp"

namespace genescreen {

struct RunConfig {
    std::size_t n_sweeps = 1000;
    std::size_t n_burnin = 200;
    std::size_t n_chains = 2;
    std::uint64_t seed = 0;
    EstimationMode mode = EstimationMode::Hierarchical;
    DpConfig dp;
    std::size_t threads = 1;
    bool trace = false;
    bool rao_blackwell = false;  // report RB averages as the primary estimate

    void check() const {
        if (n_burnin >= n_sweeps) {
            throw data_error("ValueOutOfRange", "n_burnin must be less than n_sweeps");
        }
        if (n_chains < 1) {
            throw data_error("ValueOutOfRange", "n_chains must be at least 1");
        }
        dp.check();
    }
};

namespace detail {

// Timing split used by the performance diagnostics: per-marker work vs the
// gene-level prior draws.
struct SweepTiming {
    double marker_seconds = 0.0;
    double prior_seconds = 0.0;
};

// One Gibbs chain.  Every marker and every gene owns a persistent RNG
// substream, so sweep results do not depend on iteration order or worker
// count.
class GibbsChain {
  public:
    GibbsChain(const Dataset& data, const RunConfig& cfg, std::size_t chain_index,
               const KernelDictionary* dict)
        : data_(data),
          cfg_(cfg),
          n_genes_(data.gene_index.n_genes()),
          dict_(dict) {
        const std::size_t m = data.n_markers;
        const std::uint64_t chain_key = static_cast<std::uint64_t>(chain_index) << 40;
        marker_rng_.reserve(m);
        for (std::size_t row = 0; row < m; ++row) {
            marker_rng_.emplace_back(
                substream(cfg.seed, stream_domain::marker, chain_key + row));
        }
        gene_rng_.reserve(n_genes_);
        for (const auto& gene : data.gene_index.genes) {
            gene_rng_.emplace_back(substream(
                cfg.seed, stream_domain::gene, chain_key ^ fnv1a64(gene.gene_id)));
        }
        chain_rng_ = Rng(substream(cfg.seed, stream_domain::chain, chain_index));

        counts_.markers.resize(n_genes_);
        counts_.nulls.assign(n_genes_, 0);
        for (std::size_t g = 0; g < n_genes_; ++g) {
            counts_.markers[g] = data.gene_index.genes[g].marker_rows.size();
        }
        null_indicator_.assign(m, 0);
        cond_null_.assign(m, 0.0);
        gene_prob_.assign(n_genes_, 0.5);
        init_gene_probs();

        if (data.kind == DataKind::Binary) {
            init_binary_evidence();
        } else {
            if (dict_ == nullptr) {
                throw data_error("MissingDictionary",
                                 "continuous datasets require a kernel dictionary");
            }
            dict_->check();
            init_kernel_state();
        }
    }

    void sweep(SweepTiming* timing = nullptr) {
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        if (data_.kind == DataKind::Binary) {
            sample_null_indicators_binary();
        } else {
            marker_updates_continuous();
        }
        const auto t1 = clock::now();
        update_gene_probs();
        const auto t2 = clock::now();
        if (timing != nullptr) {
            timing->marker_seconds += std::chrono::duration<double>(t1 - t0).count();
            timing->prior_seconds += std::chrono::duration<double>(t2 - t1).count();
        }
    }

    std::span<const std::uint8_t> null_indicator() const { return null_indicator_; }
    std::span<const double> conditional_null() const { return cond_null_; }
    std::span<const double> gene_prob() const { return gene_prob_; }
    double tail_weight() const {
        return dp_state_ ? dp_state_->pi.back() : 0.0;
    }

  private:
    void init_gene_probs() {
        switch (cfg_.mode) {
            case EstimationMode::Hierarchical: {
                dp_state_ = std::make_unique<DpPriorState>(
                    init_dp_state(cfg_.dp, n_genes_, chain_rng_));
                for (std::size_t g = 0; g < n_genes_; ++g) {
                    gene_prob_[g] = dp_state_->theta[dp_state_->cluster_of_gene[g]];
                }
                break;
            }
            case EstimationMode::Separate:
                for (std::size_t g = 0; g < n_genes_; ++g) {
                    gene_prob_[g] = chain_rng_.beta(cfg_.dp.a, cfg_.dp.b);
                }
                break;
            case EstimationMode::Joint: {
                const double p = chain_rng_.beta(cfg_.dp.a, cfg_.dp.b);
                std::fill(gene_prob_.begin(), gene_prob_.end(), p);
                break;
            }
            case EstimationMode::Simple:
                std::fill(gene_prob_.begin(), gene_prob_.end(), 0.5);
                break;
        }
    }

    void init_binary_evidence() {
        log_ratio_.resize(data_.n_markers);
        const auto n1 = static_cast<std::int64_t>(data_.group_size(1));
        const auto n0 = static_cast<std::int64_t>(data_.n_samples) - n1;
        for (std::size_t m = 0; m < data_.n_markers; ++m) {
            BinaryCounts c{0, 0, n0, n1};
            for (std::size_t n = 0; n < data_.n_samples; ++n) {
                if (data_.value(m, n) != 0.0) {
                    (data_.group_labels[n] ? c.s1 : c.s0) += 1;
                }
            }
            log_ratio_[m] = log_bayes_factor_binary(c);
        }
    }

    void init_kernel_state() {
        const std::size_t k = dict_->size();
        const std::size_t m = data_.n_markers;
        table_ = std::make_unique<KernelDensityTable>(*dict_);
        weights0_.assign(m * k, 0.0);
        weights1_.assign(m * k, 0.0);
        counts0_.assign(m * k, 0);
        counts1_.assign(m * k, 0);
        log_ratio_.assign(m, 0.0);
        build_lgamma_tables();
        for (std::size_t row = 0; row < m; ++row) {
            Rng& rng = marker_rng_[row];
            rng.dirichlet(dict_->lambda, marker_weights0(row));
            rng.dirichlet(dict_->lambda, marker_weights1(row));
        }
    }

    void build_lgamma_tables() {
        const std::size_t k = dict_->size();
        const std::size_t n = data_.n_samples;
        lg_component_.assign(k, std::vector<double>(n + 1));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j <= n; ++j) {
                lg_component_[i][j] = std::lgamma(static_cast<double>(j) + dict_->lambda[i]);
            }
        }
        const double total = std::accumulate(dict_->lambda.begin(), dict_->lambda.end(), 0.0);
        lg_total_.resize(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            lg_total_[j] = std::lgamma(static_cast<double>(j) + total);
        }
    }

    std::span<double> marker_weights0(std::size_t row) {
        return {weights0_.data() + row * dict_->size(), dict_->size()};
    }
    std::span<double> marker_weights1(std::size_t row) {
        return {weights1_.data() + row * dict_->size(), dict_->size()};
    }

    void sample_null_indicators_binary() {
        const std::size_t m = data_.n_markers;
        std::vector<double> logit_gene(n_genes_);
        for (std::size_t g = 0; g < n_genes_; ++g) {
            const double p = std::clamp(gene_prob_[g], 0.0, 1.0);
            if (p <= 0.0) {
                logit_gene[g] = -std::numeric_limits<double>::infinity();
            } else if (p >= 1.0) {
                logit_gene[g] = std::numeric_limits<double>::infinity();
            } else {
                logit_gene[g] = std::log(p) - std::log1p(-p);
            }
        }
        parallel_for(m, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t row = lo; row < hi; ++row) {
                const std::size_t g = data_.gene_index.gene_of_row[row];
                double prob;
                const double z = log_ratio_[row] + logit_gene[g];
                if (std::isinf(z)) {
                    prob = z > 0.0 ? 1.0 : 0.0;
                } else if (z >= 0.0) {
                    prob = 1.0 / (1.0 + std::exp(-z));
                } else {
                    const double e = std::exp(z);
                    prob = e / (1.0 + e);
                }
                cond_null_[row] = prob;
                null_indicator_[row] = marker_rng_[row].bernoulli(prob) ? 1 : 0;
            }
        });
        tally_null_counts();
    }

    // Appendix sweep order per marker: kernel assignments, null designation
    // from the Dirichlet-multinomial marginal ratio, then weight draws.
    void marker_updates_continuous() {
        const std::size_t m = data_.n_markers;
        const std::size_t k = dict_->size();
        parallel_for(m, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t row = lo; row < hi; ++row) {
                Rng& rng = marker_rng_[row];
                std::span<const double> values{data_.values.data() + row * data_.n_samples,
                                               data_.n_samples};
                std::span<std::int64_t> c0{counts0_.data() + row * k, k};
                std::span<std::int64_t> c1{counts1_.data() + row * k, k};
                sample_kernel_assignments(values, data_.group_labels, marker_weights0(row),
                                          marker_weights1(row), *table_, rng, c0, c1);
                double lg = 0.0;
                std::int64_t t0 = 0, t1 = 0;
                for (std::size_t i = 0; i < k; ++i) {
                    const auto a0 = static_cast<std::size_t>(c0[i]);
                    const auto a1 = static_cast<std::size_t>(c1[i]);
                    lg += lg_component_[i][0] + lg_component_[i][a0 + a1] -
                          lg_component_[i][a0] - lg_component_[i][a1];
                    t0 += c0[i];
                    t1 += c1[i];
                }
                lg += -lg_total_[0] - lg_total_[static_cast<std::size_t>(t0 + t1)] +
                      lg_total_[static_cast<std::size_t>(t0)] +
                      lg_total_[static_cast<std::size_t>(t1)];
                log_ratio_[row] = lg;
                const std::size_t g = data_.gene_index.gene_of_row[row];
                const double prob = null_posterior_prob(gene_prob_[g], lg);
                cond_null_[row] = prob;
                const bool is_null = rng.bernoulli(prob);
                null_indicator_[row] = is_null ? 1 : 0;
                sample_mixture_weights(c0, c1, dict_->lambda, is_null, rng,
                                       marker_weights0(row), marker_weights1(row));
            }
        });
        tally_null_counts();
    }

    void tally_null_counts() {
        std::fill(counts_.nulls.begin(), counts_.nulls.end(), 0);
        for (std::size_t row = 0; row < data_.n_markers; ++row) {
            counts_.nulls[data_.gene_index.gene_of_row[row]] += null_indicator_[row];
        }
    }

    void update_gene_probs() {
        switch (cfg_.mode) {
            case EstimationMode::Hierarchical: {
                sample_allocations(*dp_state_, counts_,
                                   [&](std::size_t g) -> Rng& { return gene_rng_[g]; });
                sample_stick_weights(*dp_state_, cfg_.dp.alpha, chain_rng_);
                sample_atoms(*dp_state_, counts_, cfg_.dp, chain_rng_, gene_prob_);
                break;
            }
            case EstimationMode::Separate:
                for (std::size_t g = 0; g < n_genes_; ++g) {
                    const auto s = static_cast<double>(counts_.nulls[g]);
                    const auto mg = static_cast<double>(counts_.markers[g]);
                    gene_prob_[g] = gene_rng_[g].beta(cfg_.dp.a + s, cfg_.dp.b + mg - s);
                }
                break;
            case EstimationMode::Joint: {
                double s = 0.0, mm = 0.0;
                for (std::size_t g = 0; g < n_genes_; ++g) {
                    s += static_cast<double>(counts_.nulls[g]);
                    mm += static_cast<double>(counts_.markers[g]);
                }
                const double p = chain_rng_.beta(cfg_.dp.a + s, cfg_.dp.b + mm - s);
                std::fill(gene_prob_.begin(), gene_prob_.end(), p);
                break;
            }
            case EstimationMode::Simple:
                break;  // fixed at 0.5
        }
    }

    const Dataset& data_;
    RunConfig cfg_;
    std::size_t n_genes_;
    const KernelDictionary* dict_;

    std::vector<Rng> marker_rng_;
    std::vector<Rng> gene_rng_;
    Rng chain_rng_;

    GeneNullCounts counts_;
    std::vector<std::uint8_t> null_indicator_;
    std::vector<double> cond_null_;
    std::vector<double> gene_prob_;
    std::vector<double> log_ratio_;
    std::unique_ptr<DpPriorState> dp_state_;

    // Continuous-model state.
    std::unique_ptr<KernelDensityTable> table_;
    std::vector<double> weights0_, weights1_;
    std::vector<std::int64_t> counts0_, counts1_;
    std::vector<std::vector<double>> lg_component_;
    std::vector<double> lg_total_;
};

}  // namespace detail

struct ScreenDiagnostics {
    detail::SweepTiming timing;
    double mean_tail_weight = 0.0;  // posterior mean of pi_H (Hierarchical)
    bool truncation_warning = false;
};

inline ScreenResult run_screen(const Dataset& data, const RunConfig& cfg,
                               const KernelDictionary* dict = nullptr,
                               ScreenDiagnostics* diag = nullptr) {
    cfg.check();
    const std::size_t m = data.n_markers;
    const std::size_t n_genes = data.gene_index.n_genes();
    const std::size_t kept = cfg.n_sweeps - cfg.n_burnin;

    ScreenResult result;
    result.mode = cfg.mode;
    result.n_sweeps = cfg.n_sweeps;
    result.n_burnin = cfg.n_burnin;
    result.seed = cfg.seed;
    result.post_null.assign(m, 0.0);
    result.post_null_rb.assign(m, 0.0);
    result.gene_prob.assign(n_genes, 0.0);

    double tail_sum = 0.0;
    std::size_t tail_count = 0;

    for (std::size_t chain = 0; chain < cfg.n_chains; ++chain) {
        detail::GibbsChain state(data, cfg, chain, dict);
        std::vector<double> chain_null(m, 0.0), chain_rb(m, 0.0), chain_gene(n_genes, 0.0);
        for (std::size_t sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
            state.sweep(diag != nullptr ? &diag->timing : nullptr);
            if (sweep < cfg.n_burnin) continue;
            auto ind = state.null_indicator();
            auto cond = state.conditional_null();
            auto gp = state.gene_prob();
            for (std::size_t row = 0; row < m; ++row) {
                chain_null[row] += ind[row];
                chain_rb[row] += cond[row];
            }
            for (std::size_t g = 0; g < n_genes; ++g) chain_gene[g] += gp[g];
            if (cfg.mode == EstimationMode::Hierarchical) {
                tail_sum += state.tail_weight();
                tail_count += 1;
            }
            if (cfg.trace && chain == 0) {
                result.trace_gene_prob.emplace_back(gp.begin(), gp.end());
                result.trace_null.emplace_back(ind.begin(), ind.end());
            }
        }
        const double inv = 1.0 / static_cast<double>(kept);
        for (std::size_t row = 0; row < m; ++row) {
            chain_null[row] *= inv;
            chain_rb[row] *= inv;
            result.post_null[row] += chain_null[row];
            result.post_null_rb[row] += chain_rb[row];
        }
        for (std::size_t g = 0; g < n_genes; ++g) {
            chain_gene[g] *= inv;
            result.gene_prob[g] += chain_gene[g];
        }
        result.chain_gene_prob.push_back(std::move(chain_gene));
    }
    const double inv_chains = 1.0 / static_cast<double>(cfg.n_chains);
    for (auto& x : result.post_null) x *= inv_chains;
    for (auto& x : result.post_null_rb) x *= inv_chains;
    for (auto& x : result.gene_prob) x *= inv_chains;

    if (cfg.n_chains >= 2) {
        double ss = 0.0;
        std::size_t pairs = 0;
        for (std::size_t c1 = 0; c1 < cfg.n_chains; ++c1) {
            for (std::size_t c2 = c1 + 1; c2 < cfg.n_chains; ++c2) {
                for (std::size_t g = 0; g < n_genes; ++g) {
                    const double d =
                        result.chain_gene_prob[c1][g] - result.chain_gene_prob[c2][g];
                    ss += d * d;
                }
                pairs += 1;
            }
        }
        result.chain_rms_difference =
            std::sqrt(ss / static_cast<double>(pairs * std::max<std::size_t>(n_genes, 1)));
        result.chain_divergence_warning = result.chain_rms_difference > 0.05;
    }
    if (diag != nullptr && tail_count > 0) {
        diag->mean_tail_weight = tail_sum / static_cast<double>(tail_count);
        diag->truncation_warning = diag->mean_tail_weight > 1e-4;
    }
    if (cfg.rao_blackwell) {
        result.post_null.swap(result.post_null_rb);
    }
    return result;
}

// Kullback-Leibler divergence between Bernoulli(q) and Bernoulli(p), with
// arguments clamped away from {0, 1}.
inline double kl_bernoulli(double q, double p) {
    q = std::clamp(q, 1e-12, 1.0 - 1e-12);
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return q * std::log(q / p) + (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
}

// Leaves out a random fraction of markers, fits gene priors on the rest, and
// returns the mean KL divergence of each held-out marker's full-data
// posterior from its gene-level prior.
inline double cross_validate_priors(const Dataset& data, const RunConfig& cfg,
                                    double holdout_fraction, Rng& rng,
                                    const KernelDictionary* dict = nullptr) {
    const std::size_t m = data.n_markers;
    const auto n_holdout = static_cast<std::size_t>(
        std::floor(holdout_fraction * static_cast<double>(m)));
    if (n_holdout == 0) {
        throw data_error("InsufficientHoldout", "holdout fraction selects zero markers");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < n_holdout; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(m - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::uint8_t> held(m, 0);
    for (std::size_t i = 0; i < n_holdout; ++i) held[order[i]] = 1;

    Dataset retained;
    retained.kind = data.kind;
    retained.n_samples = data.n_samples;
    retained.group_labels = data.group_labels;
    for (std::size_t row = 0; row < m; ++row) {
        if (held[row]) continue;
        retained.marker_ids.push_back(data.marker_ids[row]);
        retained.gene_of_marker.push_back(data.gene_of_marker[row]);
        retained.values.insert(retained.values.end(),
                               data.values.begin() + row * data.n_samples,
                               data.values.begin() + (row + 1) * data.n_samples);
        retained.n_markers += 1;
    }
    if (retained.n_markers == 0) {
        throw data_error("InsufficientHoldout", "holdout removed every marker");
    }
    retained = validate_dataset(std::move(retained));

    const ScreenResult prior_fit = run_screen(retained, cfg, dict);
    std::unordered_map<std::string, double> gene_prior;
    for (std::size_t g = 0; g < retained.gene_index.n_genes(); ++g) {
        gene_prior[retained.gene_index.genes[g].gene_id] = prior_fit.gene_prob[g];
    }
    const double base_mean = cfg.dp.a / (cfg.dp.a + cfg.dp.b);

    const ScreenResult full_fit = run_screen(data, cfg, dict);

    double total = 0.0;
    for (std::size_t row = 0; row < m; ++row) {
        if (!held[row]) continue;
        double prior;
        if (cfg.mode == EstimationMode::Simple) {
            prior = 0.5;
        } else if (cfg.mode == EstimationMode::Joint) {
            prior = prior_fit.gene_prob.empty() ? base_mean : prior_fit.gene_prob[0];
        } else {
            auto it = gene_prior.find(data.gene_of_marker[row]);
            prior = it != gene_prior.end() ? it->second : base_mean;
        }
        total += kl_bernoulli(full_fit.post_null[row], prior);
    }
    return total / static_cast<double>(n_holdout);
}

}  // namespace genescreen
