#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "genescreen/screen_engine.hpp"
#include "genescreen/sim_harness.hpp"

using namespace genescreen;

namespace {

LabeledDataset small_bimodal(std::uint64_t seed, std::size_t n_genes = 30,
                             std::size_t samples = 30) {
    ScenarioConfig cfg;
    cfg.kind = ScenarioKind::Bimodal;
    cfg.n_genes = n_genes;
    cfg.markers_low = 2;
    cfg.markers_high = 6;
    cfg.n0 = samples;
    cfg.n1 = samples;
    cfg.seed = seed;
    Rng rng(seed);
    return generate_scenario(cfg, rng);
}

}  // namespace

TEST_CASE("run config validation") {
    RunConfig cfg;
    cfg.n_sweeps = 100;
    cfg.n_burnin = 100;
    REQUIRE_THROWS_AS(cfg.check(), Error);
    cfg.n_burnin = 10;
    cfg.n_chains = 0;
    REQUIRE_THROWS_AS(cfg.check(), Error);
}

TEST_CASE("Simple mode matches the closed-form marker posterior") {
    const LabeledDataset sim = small_bimodal(101, 12, 25);
    RunConfig cfg;
    cfg.mode = EstimationMode::Simple;
    cfg.n_sweeps = 4000;
    cfg.n_burnin = 200;
    cfg.n_chains = 1;
    cfg.seed = 7;
    const ScreenResult res = run_screen(sim.data, cfg);

    const auto n1 = static_cast<std::int64_t>(sim.data.group_size(1));
    const auto n0 = static_cast<std::int64_t>(sim.data.n_samples) - n1;
    const std::size_t kept = cfg.n_sweeps - cfg.n_burnin;
    for (std::size_t m = 0; m < sim.data.n_markers; ++m) {
        BinaryCounts c{0, 0, n0, n1};
        for (std::size_t n = 0; n < sim.data.n_samples; ++n) {
            if (sim.data.value(m, n) != 0.0) (sim.data.group_labels[n] ? c.s1 : c.s0) += 1;
        }
        const double lbf = log_bayes_factor_binary(c);
        const double closed = 1.0 / (1.0 + std::exp(-lbf));
        // With the fixed 0.5 prior the conditional never changes, so the
        // Rao-Blackwellized average is exact and the draw average is binomial.
        REQUIRE(res.post_null_rb[m] == Catch::Approx(closed).margin(1e-12));
        const double se = std::sqrt(std::max(closed * (1.0 - closed), 1e-6) / double(kept));
        REQUIRE(std::abs(res.post_null[m] - closed) < 4.0 * se + 1e-9);
    }
    for (double g : res.gene_prob) REQUIRE(g == 0.5);
}

TEST_CASE("Joint mode shares one gene probability") {
    const LabeledDataset sim = small_bimodal(102, 10, 20);
    RunConfig cfg;
    cfg.mode = EstimationMode::Joint;
    cfg.n_sweeps = 200;
    cfg.n_burnin = 50;
    cfg.n_chains = 1;
    cfg.seed = 3;
    const ScreenResult res = run_screen(sim.data, cfg);
    for (double g : res.gene_prob) {
        REQUIRE(g == Catch::Approx(res.gene_prob[0]).margin(1e-14));
    }
}

TEST_CASE("posterior summaries stay inside the unit interval") {
    const LabeledDataset sim = small_bimodal(103, 15, 20);
    for (EstimationMode mode : {EstimationMode::Hierarchical, EstimationMode::Separate,
                                EstimationMode::Joint, EstimationMode::Simple}) {
        RunConfig cfg;
        cfg.mode = mode;
        cfg.n_sweeps = 120;
        cfg.n_burnin = 20;
        cfg.n_chains = 2;
        cfg.seed = 11;
        const ScreenResult res = run_screen(sim.data, cfg);
        for (double x : res.post_null) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
        }
        for (double x : res.gene_prob) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
        }
    }
}

TEST_CASE("results are reproducible and thread-count invariant") {
    const LabeledDataset sim = small_bimodal(104, 20, 20);
    RunConfig cfg;
    cfg.mode = EstimationMode::Hierarchical;
    cfg.n_sweeps = 150;
    cfg.n_burnin = 30;
    cfg.n_chains = 2;
    cfg.seed = 99;
    cfg.threads = 1;
    const ScreenResult a = run_screen(sim.data, cfg);
    const ScreenResult b = run_screen(sim.data, cfg);
    cfg.threads = 3;
    const ScreenResult c = run_screen(sim.data, cfg);
    REQUIRE(a.post_null == b.post_null);
    REQUIRE(a.gene_prob == b.gene_prob);
    REQUIRE(a.post_null == c.post_null);
    REQUIRE(a.post_null_rb == c.post_null_rb);
    REQUIRE(a.gene_prob == c.gene_prob);
}

TEST_CASE("agreeing chains do not trigger the divergence warning") {
    const LabeledDataset sim = small_bimodal(105, 25, 30);
    RunConfig cfg;
    cfg.mode = EstimationMode::Joint;
    cfg.n_sweeps = 600;
    cfg.n_burnin = 150;
    cfg.n_chains = 2;
    cfg.seed = 5;
    const ScreenResult res = run_screen(sim.data, cfg);
    REQUIRE(res.chain_gene_prob.size() == 2);
    REQUIRE(res.chain_rms_difference < 0.05);
    REQUIRE_FALSE(res.chain_divergence_warning);
}

TEST_CASE("single gene makes Separate and Joint agree in distribution") {
    ScenarioConfig sc;
    sc.kind = ScenarioKind::GlobalNull;
    sc.n_genes = 1;
    sc.markers_low = 6;
    sc.markers_high = 6;
    sc.n0 = sc.n1 = 30;
    Rng gen(77);
    const LabeledDataset sim = generate_scenario(sc, gen);

    RunConfig cfg;
    cfg.n_sweeps = 10000;
    cfg.n_burnin = 0;
    cfg.n_chains = 1;
    cfg.seed = 13;
    cfg.trace = true;

    cfg.mode = EstimationMode::Separate;
    const ScreenResult sep = run_screen(sim.data, cfg);
    cfg.mode = EstimationMode::Joint;
    const ScreenResult joint = run_screen(sim.data, cfg);

    std::vector<double> a, b;
    for (const auto& row : sep.trace_gene_prob) a.push_back(row[0]);
    for (const auto& row : joint.trace_gene_prob) b.push_back(row[0]);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // Two-sample Kolmogorov-Smirnov statistic; critical value at the 1e-3
    // level for n = m = 10^4 is about 0.0276.
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        ks = std::max(ks, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    REQUIRE(ks < 0.0276);
}

TEST_CASE("one marker per gene: Hierarchical with tiny alpha matches Joint") {
    ScenarioConfig sc;
    sc.kind = ScenarioKind::GlobalNull;
    sc.n_genes = 40;
    sc.markers_low = 1;
    sc.markers_high = 1;
    sc.n0 = sc.n1 = 25;
    Rng gen(88);
    const LabeledDataset sim = generate_scenario(sc, gen);

    RunConfig cfg;
    cfg.n_sweeps = 5000;
    cfg.n_burnin = 500;
    cfg.n_chains = 1;
    cfg.seed = 17;

    cfg.mode = EstimationMode::Joint;
    const ScreenResult joint = run_screen(sim.data, cfg);
    cfg.mode = EstimationMode::Hierarchical;
    cfg.dp.alpha = 1e-6;
    const ScreenResult hier = run_screen(sim.data, cfg);

    for (std::size_t g = 0; g < sim.data.gene_index.n_genes(); ++g) {
        REQUIRE(std::abs(hier.gene_prob[g] - joint.gene_prob[g]) < 0.02);
    }
}

TEST_CASE("Kullback-Leibler divergence between Bernoulli laws") {
    REQUIRE(kl_bernoulli(0.3, 0.3) == 0.0);
    REQUIRE(kl_bernoulli(0.5, 0.5) == 0.0);
    REQUIRE(kl_bernoulli(0.9, 0.5) ==
            Catch::Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)).margin(1e-12));
    REQUIRE(kl_bernoulli(0.9, 0.5) == Catch::Approx(0.3681).margin(5e-4));
    // Clamping keeps degenerate arguments finite.
    REQUIRE(std::isfinite(kl_bernoulli(0.0, 1.0)));
    REQUIRE(kl_bernoulli(0.2, 0.7) > 0.0);
}

TEST_CASE("cross-validation diagnostic") {
    const LabeledDataset sim = small_bimodal(106, 30, 25);
    RunConfig cfg;
    cfg.n_sweeps = 300;
    cfg.n_burnin = 60;
    cfg.n_chains = 1;
    cfg.seed = 23;

    SECTION("zero holdout is rejected") {
        Rng rng(1);
        REQUIRE_THROWS_MATCHES(cross_validate_priors(sim.data, cfg, 0.0, rng), Error,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("InsufficientHoldout")));
    }
    SECTION("gene-aware priors beat the global and fixed priors on bimodal data") {
        cfg.mode = EstimationMode::Hierarchical;
        Rng rng_h(42);
        const double kl_h = cross_validate_priors(sim.data, cfg, 0.15, rng_h);
        cfg.mode = EstimationMode::Joint;
        Rng rng_j(42);
        const double kl_j = cross_validate_priors(sim.data, cfg, 0.15, rng_j);
        cfg.mode = EstimationMode::Simple;
        Rng rng_s(42);
        const double kl_s = cross_validate_priors(sim.data, cfg, 0.15, rng_s);
        REQUIRE(kl_h >= 0.0);
        REQUIRE(kl_j >= 0.0);
        REQUIRE(kl_s >= 0.0);
        REQUIRE(kl_h < kl_j);
        REQUIRE(kl_h < kl_s);
    }
}

TEST_CASE("continuous screening runs end to end") {
    KernelDictionary dict;
    dict.mu = {0.125, 0.375, 0.625, 0.875};
    dict.sigma = {0.08, 0.08, 0.08, 0.08};
    dict.lambda = {0.25, 0.25, 0.25, 0.25};

    ScenarioConfig sc;
    sc.kind = ScenarioKind::Bimodal;
    sc.n_genes = 10;
    sc.markers_low = 2;
    sc.markers_high = 4;
    sc.n0 = sc.n1 = 20;
    Rng gen(55);
    const LabeledDataset sim = generate_continuous_scenario(sc, dict, gen);

    RunConfig cfg;
    cfg.mode = EstimationMode::Hierarchical;
    cfg.n_sweeps = 200;
    cfg.n_burnin = 50;
    cfg.n_chains = 2;
    cfg.seed = 31;
    const ScreenResult res = run_screen(sim.data, cfg, &dict);
    for (double x : res.post_null) {
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
    }
    // The posterior separates truth on average.
    double null_mean = 0.0, alt_mean = 0.0;
    std::size_t n_null = 0, n_alt = 0;
    for (std::size_t m = 0; m < sim.truth_null.size(); ++m) {
        if (sim.truth_null[m]) {
            null_mean += res.post_null[m];
            n_null += 1;
        } else {
            alt_mean += res.post_null[m];
            n_alt += 1;
        }
    }
    if (n_null > 0 && n_alt > 0) {
        REQUIRE(null_mean / n_null > alt_mean / n_alt);
    }

    SECTION("the dictionary is required") {
        REQUIRE_THROWS_MATCHES(run_screen(sim.data, cfg), Error,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("MissingDictionary")));
    }
}
