// Simulation scenarios, error metrics, ROC curves, permutation experiments,
// and the replicated method-comparison harness.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "genescreen/core_types.hpp"
#include "genescreen/freq_baselines.hpp"
#include "genescreen/marker_models.hpp"
#include "genescreen/rng.hpp"
#include "genescreen/screen_engine.hpp"

namespace genescreen {

inline std::uint64_t splitmix64_mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

enum class ScenarioKind { GlobalNull, Bimodal, BetaTail, CustomBeta };

inline const char* scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::GlobalNull: return "null";
        case ScenarioKind::Bimodal: return "bimodal";
        case ScenarioKind::BetaTail: return "beta-tail";
        case ScenarioKind::CustomBeta: return "custom-beta";
    }
    return "?";
}

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::GlobalNull;
    std::size_t n_genes = 1000;
    std::size_t markers_low = 2;
    std::size_t markers_high = 20;
    std::size_t n0 = 100;
    std::size_t n1 = 100;
    double null_fraction = 0.8;  // Bimodal only
    double beta_a = 1.0;         // CustomBeta only
    double beta_b = 0.2;
    std::uint64_t seed = 0;
};

struct LabeledDataset {
    Dataset data;
    std::vector<std::uint8_t> truth_null;  // per marker
    std::vector<double> true_gene_prob;    // per gene
};

// Binary simulation of the three scenarios: per gene, M_g ~ U{low..high} and
// a scenario-specific p_g; each marker is null with probability p_g.  Null
// markers share one Uniform(0,1) success probability across groups,
// alternative markers draw one per group.
inline LabeledDataset generate_scenario(const ScenarioConfig& cfg, Rng& rng) {
    if (cfg.markers_low < 1 || cfg.markers_high < cfg.markers_low || cfg.n_genes < 1) {
        throw data_error("ValueOutOfRange", "invalid scenario configuration");
    }
    LabeledDataset out;
    Dataset& data = out.data;
    data.kind = DataKind::Binary;
    data.n_samples = cfg.n0 + cfg.n1;
    data.group_labels.assign(cfg.n0, 0);
    data.group_labels.insert(data.group_labels.end(), cfg.n1, 1);

    for (std::size_t g = 0; g < cfg.n_genes; ++g) {
        const std::size_t span = cfg.markers_high - cfg.markers_low + 1;
        const std::size_t m_g = cfg.markers_low + static_cast<std::size_t>(rng.uniform_index(span));
        double p_g;
        switch (cfg.kind) {
            case ScenarioKind::GlobalNull: p_g = 1.0; break;
            case ScenarioKind::Bimodal: p_g = rng.bernoulli(cfg.null_fraction) ? 1.0 : 0.0; break;
            case ScenarioKind::BetaTail: p_g = rng.beta(1.0, 0.2); break;
            case ScenarioKind::CustomBeta: p_g = rng.beta(cfg.beta_a, cfg.beta_b); break;
            default: p_g = 1.0; break;
        }
        out.true_gene_prob.push_back(p_g);
        const std::string gene_id = "G" + std::to_string(g + 1);
        for (std::size_t m = 0; m < m_g; ++m) {
            const bool is_null = rng.bernoulli(p_g);
            out.truth_null.push_back(is_null ? 1 : 0);
            data.marker_ids.push_back(gene_id + "_m" + std::to_string(m + 1));
            data.gene_of_marker.push_back(gene_id);
            double prob0, prob1;
            if (is_null) {
                prob0 = prob1 = rng.uniform();
            } else {
                prob0 = rng.uniform();
                prob1 = rng.uniform();
            }
            for (std::size_t n = 0; n < data.n_samples; ++n) {
                const double prob = data.group_labels[n] ? prob1 : prob0;
                data.values.push_back(rng.bernoulli(prob) ? 1.0 : 0.0);
            }
            data.n_markers += 1;
        }
    }
    out.data = validate_dataset(std::move(out.data));
    return out;
}

inline double sample_truncnorm01(double mu, double sigma, Rng& rng) {
    // Rejection against the untruncated normal; dictionary kernels keep the
    // acceptance rate high.
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double x = rng.normal(mu, sigma);
        if (x >= 0.0 && x <= 1.0) return x;
    }
    return std::clamp(mu, 0.0, 1.0);
}

// Continuous analog of generate_scenario under the shared-kernel model: null
// markers share one Dirichlet(lambda) weight vector, alternative markers draw
// one per group, and values come from the truncated-normal mixture.
inline LabeledDataset generate_continuous_scenario(const ScenarioConfig& cfg,
                                                   const KernelDictionary& dict, Rng& rng) {
    dict.check();
    LabeledDataset out;
    Dataset& data = out.data;
    data.kind = DataKind::Continuous01;
    data.n_samples = cfg.n0 + cfg.n1;
    data.group_labels.assign(cfg.n0, 0);
    data.group_labels.insert(data.group_labels.end(), cfg.n1, 1);
    const std::size_t k = dict.size();
    std::vector<double> w0(k), w1(k);

    for (std::size_t g = 0; g < cfg.n_genes; ++g) {
        const std::size_t span = cfg.markers_high - cfg.markers_low + 1;
        const std::size_t m_g = cfg.markers_low + static_cast<std::size_t>(rng.uniform_index(span));
        double p_g;
        switch (cfg.kind) {
            case ScenarioKind::GlobalNull: p_g = 1.0; break;
            case ScenarioKind::Bimodal: p_g = rng.bernoulli(cfg.null_fraction) ? 1.0 : 0.0; break;
            case ScenarioKind::BetaTail: p_g = rng.beta(1.0, 0.2); break;
            case ScenarioKind::CustomBeta: p_g = rng.beta(cfg.beta_a, cfg.beta_b); break;
            default: p_g = 1.0; break;
        }
        out.true_gene_prob.push_back(p_g);
        const std::string gene_id = "G" + std::to_string(g + 1);
        for (std::size_t m = 0; m < m_g; ++m) {
            const bool is_null = rng.bernoulli(p_g);
            out.truth_null.push_back(is_null ? 1 : 0);
            data.marker_ids.push_back(gene_id + "_m" + std::to_string(m + 1));
            data.gene_of_marker.push_back(gene_id);
            rng.dirichlet(dict.lambda, w0);
            if (is_null) {
                w1 = w0;
            } else {
                rng.dirichlet(dict.lambda, w1);
            }
            for (std::size_t n = 0; n < data.n_samples; ++n) {
                const auto& w = data.group_labels[n] ? w1 : w0;
                const std::size_t kk = rng.categorical(w);
                data.values.push_back(sample_truncnorm01(dict.mu[kk], dict.sigma[kk], rng));
            }
            data.n_markers += 1;
        }
    }
    out.data = validate_dataset(std::move(out.data));
    return out;
}

// Mean posterior probability assigned to the wrong hypothesis.
inline double expected_error(std::span<const double> post_null,
                             std::span<const std::uint8_t> truth_null) {
    if (post_null.size() != truth_null.size()) {
        throw data_error("DimensionMismatch", "posterior and truth lengths differ");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < post_null.size(); ++i) {
        total += truth_null[i] ? 1.0 - post_null[i] : post_null[i];
    }
    return total / static_cast<double>(post_null.size());
}

// Misclassification fraction of hard decisions against the truth flags.
// `classified_alternative` holds the per-marker decision.
inline double threshold_error(std::span<const std::uint8_t> classified_alternative,
                              std::span<const std::uint8_t> truth_null) {
    if (classified_alternative.size() != truth_null.size()) {
        throw data_error("DimensionMismatch", "decision and truth lengths differ");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth_null.size(); ++i) {
        const bool truly_alt = truth_null[i] == 0;
        if (static_cast<bool>(classified_alternative[i]) != truly_alt) wrong += 1;
    }
    return static_cast<double>(wrong) / static_cast<double>(truth_null.size());
}

inline std::vector<std::uint8_t> classify_posterior(std::span<const double> post_null,
                                                    double threshold = 0.5) {
    std::vector<std::uint8_t> alt(post_null.size());
    for (std::size_t i = 0; i < post_null.size(); ++i) alt[i] = post_null[i] < threshold ? 1 : 0;
    return alt;
}

struct RocPoint {
    double fpr;
    double tpr;
};

// Full threshold sweep over unique score values (larger = more alternative);
// tied scores are grouped.  Curve starts at (0,0) and ends at (1,1).
inline std::vector<RocPoint> roc_points(std::span<const double> scores,
                                        std::span<const std::uint8_t> truth_null) {
    if (scores.size() != truth_null.size()) {
        throw data_error("DimensionMismatch", "score and truth lengths differ");
    }
    std::size_t n_alt = 0;
    for (auto t : truth_null) n_alt += (t == 0);
    const std::size_t n_null = truth_null.size() - n_alt;
    if (n_alt == 0 || n_null == 0) {
        throw data_error("DegenerateTruth", "ROC needs both null and alternative markers");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (truth_null[order[i]] == 0) {
                tp += 1;
            } else {
                fp += 1;
            }
            ++i;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_null),
                          static_cast<double>(tp) / static_cast<double>(n_alt)});
    }
    return points;
}

inline double auc(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
    }
    return area;
}

inline Dataset permute_gene_labels(const Dataset& data, Rng& rng) {
    Dataset out = data;
    out.gene_index = GeneIndex{};
    for (std::size_t i = out.gene_of_marker.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(out.gene_of_marker[i - 1], out.gene_of_marker[j]);
    }
    return validate_dataset(std::move(out));
}

inline Dataset permute_class_labels(const Dataset& data, Rng& rng) {
    Dataset out = data;
    out.gene_index = GeneIndex{};
    for (std::size_t i = out.group_labels.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(out.group_labels[i - 1], out.group_labels[j]);
    }
    return validate_dataset(std::move(out));
}

enum class Method {
    Hierarchical,
    Separate,
    Joint,
    Simple,
    TwoStepFdr,
    SeparateFdr,
    OverallFdr,
    NoCorrection,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Hierarchical: return "hierarchical";
        case Method::Separate: return "separate";
        case Method::Joint: return "joint";
        case Method::Simple: return "simple";
        case Method::TwoStepFdr: return "two-step-fdr";
        case Method::SeparateFdr: return "separate-fdr";
        case Method::OverallFdr: return "overall-fdr";
        case Method::NoCorrection: return "no-correction";
    }
    return "?";
}

inline bool method_is_bayesian(Method m) {
    return m == Method::Hierarchical || m == Method::Separate || m == Method::Joint ||
           m == Method::Simple;
}

inline std::vector<Method> all_methods() {
    return {Method::Hierarchical, Method::Separate, Method::Joint,       Method::Simple,
            Method::TwoStepFdr,   Method::SeparateFdr, Method::OverallFdr, Method::NoCorrection};
}

struct ComparisonRow {
    Method method;
    ScenarioKind scenario;
    std::size_t replicates = 0;
    double mean_threshold_error = 0.0;
    double se_threshold_error = std::numeric_limits<double>::quiet_NaN();
    double mean_expected_error = std::numeric_limits<double>::quiet_NaN();
    double se_expected_error = std::numeric_limits<double>::quiet_NaN();
    double mean_expected_error_rb = std::numeric_limits<double>::quiet_NaN();
    double mean_auc = std::numeric_limits<double>::quiet_NaN();
};

struct MethodEvaluation {
    double threshold_error = 0.0;
    double expected_error = std::numeric_limits<double>::quiet_NaN();
    double expected_error_rb = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> roc_score;  // larger = more alternative
};

// Evaluates one method on one labeled dataset.  Bayesian methods run the
// Gibbs screen; frequentist methods share the Fisher p-values passed in.
inline MethodEvaluation evaluate_method(Method method, const LabeledDataset& sim,
                                        std::span<const double> fisher_p, const RunConfig& run_cfg,
                                        double posterior_threshold = 0.5, double fdr_level = 0.05) {
    MethodEvaluation out;
    if (method_is_bayesian(method)) {
        RunConfig cfg = run_cfg;
        switch (method) {
            case Method::Hierarchical: cfg.mode = EstimationMode::Hierarchical; break;
            case Method::Separate: cfg.mode = EstimationMode::Separate; break;
            case Method::Joint: cfg.mode = EstimationMode::Joint; break;
            default: cfg.mode = EstimationMode::Simple; break;
        }
        cfg.rao_blackwell = false;
        const ScreenResult res = run_screen(sim.data, cfg);
        const auto decisions = classify_posterior(res.post_null, posterior_threshold);
        out.threshold_error = threshold_error(decisions, sim.truth_null);
        out.expected_error = expected_error(res.post_null, sim.truth_null);
        out.expected_error_rb = expected_error(res.post_null_rb, sim.truth_null);
        out.roc_score.resize(res.post_null.size());
        for (std::size_t i = 0; i < res.post_null.size(); ++i) {
            out.roc_score[i] = 1.0 - res.post_null[i];
        }
        return out;
    }
    std::vector<std::uint8_t> rejected;
    switch (method) {
        case Method::TwoStepFdr:
            rejected = two_step_hierarchical(fisher_p, sim.data.gene_index, fdr_level).rejected;
            break;
        case Method::SeparateFdr:
            rejected = per_gene_bh(fisher_p, sim.data.gene_index, fdr_level);
            break;
        case Method::OverallFdr:
            rejected = bh_adjust(fisher_p, fdr_level).rejected;
            break;
        default:
            rejected.resize(fisher_p.size());
            for (std::size_t i = 0; i < fisher_p.size(); ++i) {
                rejected[i] = fisher_p[i] <= fdr_level ? 1 : 0;
            }
            break;
    }
    out.threshold_error = threshold_error(rejected, sim.truth_null);
    out.roc_score.resize(fisher_p.size());
    for (std::size_t i = 0; i < fisher_p.size(); ++i) out.roc_score[i] = 1.0 - fisher_p[i];
    return out;
}

inline std::vector<double> fisher_pvalues(const Dataset& data) {
    if (data.kind != DataKind::Binary) {
        throw data_error("ValueOutOfRange", "Fisher tests require binary data");
    }
    const auto n1 = static_cast<std::int64_t>(data.group_size(1));
    const auto n0 = static_cast<std::int64_t>(data.n_samples) - n1;
    std::vector<double> p(data.n_markers);
    for (std::size_t m = 0; m < data.n_markers; ++m) {
        BinaryCounts c{0, 0, n0, n1};
        for (std::size_t n = 0; n < data.n_samples; ++n) {
            if (data.value(m, n) != 0.0) (data.group_labels[n] ? c.s1 : c.s0) += 1;
        }
        p[m] = fisher_exact_p(c);
    }
    return p;
}

// Replicated comparison across methods on one scenario; means and standard
// errors over replicates.
inline std::vector<ComparisonRow> run_comparison(const ScenarioConfig& scenario,
                                                 std::size_t replicates,
                                                 std::span<const Method> methods,
                                                 const RunConfig& run_cfg) {
    if (replicates < 1) {
        throw data_error("ValueOutOfRange", "replicates must be at least 1");
    }
    struct Accum {
        std::vector<double> threshold, expected, expected_rb, aucs;
    };
    std::vector<Accum> acc(methods.size());

    const bool need_fisher =
        std::any_of(methods.begin(), methods.end(), [](Method m) { return !method_is_bayesian(m); });

    for (std::size_t rep = 0; rep < replicates; ++rep) {
        Rng rng(substream(scenario.seed, stream_domain::replicate, rep));
        const LabeledDataset sim = generate_scenario(scenario, rng);
        std::vector<double> fisher_p;
        if (need_fisher) fisher_p = fisher_pvalues(sim.data);
        bool has_alt = false;
        for (auto t : sim.truth_null) has_alt |= (t == 0);
        RunConfig rep_cfg = run_cfg;
        rep_cfg.seed = splitmix64_mix(run_cfg.seed, rep);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const MethodEvaluation eval = evaluate_method(methods[i], sim, fisher_p, rep_cfg);
            acc[i].threshold.push_back(eval.threshold_error);
            if (method_is_bayesian(methods[i])) {
                acc[i].expected.push_back(eval.expected_error);
                acc[i].expected_rb.push_back(eval.expected_error_rb);
            }
            if (has_alt) {
                acc[i].aucs.push_back(auc(roc_points(eval.roc_score, sim.truth_null)));
            }
        }
    }

    auto mean_of = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto se_of = [&](const std::vector<double>& v) {
        if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        const double m = mean_of(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    };

    std::vector<ComparisonRow> rows;
    for (std::size_t i = 0; i < methods.size(); ++i) {
        ComparisonRow row;
        row.method = methods[i];
        row.scenario = scenario.kind;
        row.replicates = replicates;
        row.mean_threshold_error = mean_of(acc[i].threshold);
        row.se_threshold_error = se_of(acc[i].threshold);
        row.mean_expected_error = mean_of(acc[i].expected);
        row.se_expected_error = se_of(acc[i].expected);
        row.mean_expected_error_rb = mean_of(acc[i].expected_rb);
        row.mean_auc = mean_of(acc[i].aucs);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace genescreen
