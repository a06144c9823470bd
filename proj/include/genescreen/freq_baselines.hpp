// Frequentist comparators: Fisher's exact test per marker and the three
// multiplicity-correction regimes (per-gene BH, overall BH, and the two-step
// Hochberg/BH hierarchical procedure).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "genescreen/core_types.hpp"
#include "genescreen/marker_models.hpp"

namespace genescreen {

// Two-sided Fisher exact p-value with the point-probability rule: the sum of
// hypergeometric probabilities of all tables no more probable than the
// observed one.  Computed in log space; ties compared with a small relative
// slack against rounding in the log-gamma route.
inline double fisher_exact_p(const BinaryCounts& c) {
    const std::int64_t t = c.s0 + c.s1;
    const std::int64_t n = c.n0 + c.n1;
    const std::int64_t lo = std::max<std::int64_t>(0, t - c.n1);
    const std::int64_t hi = std::min(c.n0, t);
    auto log_choose = [](std::int64_t nn, std::int64_t kk) {
        return std::lgamma(static_cast<double>(nn + 1)) -
               std::lgamma(static_cast<double>(kk + 1)) -
               std::lgamma(static_cast<double>(nn - kk + 1));
    };
    const double log_denom = log_choose(n, t);
    auto log_prob = [&](std::int64_t k) {
        return log_choose(c.n0, k) + log_choose(c.n1, t - k) - log_denom;
    };
    const double log_obs = log_prob(c.s0);
    const double tie_slack = 1e-7;
    double p = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) {
        const double lp = log_prob(k);
        if (lp <= log_obs + tie_slack) p += std::exp(lp);
    }
    return std::min(p, 1.0);
}

struct BhResult {
    std::vector<double> adjusted;       // monotone BH q-values
    std::vector<std::uint8_t> rejected;  // at the given level
    std::size_t n_rejected = 0;
};

// Benjamini-Hochberg step-up at level q.  Ties broken by stable sort on
// index, so results are deterministic.
inline BhResult bh_adjust(std::span<const double> p, double q) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
    BhResult out;
    out.adjusted.resize(m);
    out.rejected.assign(m, 0);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double scaled = p[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, scaled);
        out.adjusted[order[r]] = running;
    }
    // Step-up rejection: largest i with p_(i) <= q i / m, reject that prefix.
    std::size_t cut = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (p[order[r]] <= q * static_cast<double>(r + 1) / static_cast<double>(m)) {
            cut = r + 1;
        }
    }
    for (std::size_t r = 0; r < cut; ++r) out.rejected[order[r]] = 1;
    out.n_rejected = cut;
    return out;
}

struct HochbergResult {
    std::vector<std::uint8_t> rejected;
    std::size_t n_rejected = 0;
};

// Hochberg step-up FWER procedure at level alpha.
inline HochbergResult hochberg_adjust(std::span<const double> p, double alpha) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
    HochbergResult out;
    out.rejected.assign(m, 0);
    std::size_t cut = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (p[order[r]] <= alpha / static_cast<double>(m - r)) cut = r + 1;
    }
    for (std::size_t r = 0; r < cut; ++r) out.rejected[order[r]] = 1;
    out.n_rejected = cut;
    return out;
}

// Hochberg-adjusted minimum over a gene's marker p-values:
// min_i (M_g - i + 1) p_(i), capped at 1.
inline double hochberg_gene_pvalue(std::span<const double> p) {
    std::vector<double> sorted(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end());
    double best = 1.0;
    const std::size_t m = sorted.size();
    for (std::size_t i = 0; i < m; ++i) {
        best = std::min(best, static_cast<double>(m - i) * sorted[i]);
    }
    return std::min(best, 1.0);
}

struct TwoStepResult {
    std::vector<double> gene_p;            // per gene, stage-1 p-value
    std::vector<std::uint8_t> gene_selected;  // per gene
    std::vector<std::uint8_t> rejected;    // per marker
    std::size_t n_genes_selected = 0;
};

// Two-step hierarchical testing: stage 1 screens genes via BH across
// Hochberg-combined gene p-values at level q; stage 2 runs BH within each
// selected gene at level q R / G.
inline TwoStepResult two_step_hierarchical(std::span<const double> p, const GeneIndex& index,
                                           double q) {
    const std::size_t n_genes = index.n_genes();
    TwoStepResult out;
    out.gene_p.resize(n_genes);
    out.gene_selected.assign(n_genes, 0);
    out.rejected.assign(p.size(), 0);
    std::vector<double> gene_markers;
    for (std::size_t g = 0; g < n_genes; ++g) {
        gene_markers.clear();
        for (std::size_t row : index.genes[g].marker_rows) gene_markers.push_back(p[row]);
        out.gene_p[g] = hochberg_gene_pvalue(gene_markers);
    }
    const BhResult stage1 = bh_adjust(out.gene_p, q);
    out.n_genes_selected = stage1.n_rejected;
    if (out.n_genes_selected == 0) return out;
    const double stage2_level = q * static_cast<double>(out.n_genes_selected) /
                                static_cast<double>(n_genes);
    for (std::size_t g = 0; g < n_genes; ++g) {
        if (!stage1.rejected[g]) continue;
        out.gene_selected[g] = 1;
        gene_markers.clear();
        for (std::size_t row : index.genes[g].marker_rows) gene_markers.push_back(p[row]);
        const BhResult stage2 = bh_adjust(gene_markers, stage2_level);
        for (std::size_t i = 0; i < index.genes[g].marker_rows.size(); ++i) {
            out.rejected[index.genes[g].marker_rows[i]] = stage2.rejected[i];
        }
    }
    return out;
}

// Per-gene BH at level q (the "separate FDR" comparator).
inline std::vector<std::uint8_t> per_gene_bh(std::span<const double> p, const GeneIndex& index,
                                             double q) {
    std::vector<std::uint8_t> rejected(p.size(), 0);
    std::vector<double> gene_markers;
    for (const auto& gene : index.genes) {
        gene_markers.clear();
        for (std::size_t row : gene.marker_rows) gene_markers.push_back(p[row]);
        const BhResult res = bh_adjust(gene_markers, q);
        for (std::size_t i = 0; i < gene.marker_rows.size(); ++i) {
            rejected[gene.marker_rows[i]] = res.rejected[i];
        }
    }
    return rejected;
}

}  // namespace genescreen
