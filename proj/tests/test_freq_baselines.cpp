#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "genescreen/freq_baselines.hpp"
#include "genescreen/rng.hpp"
#include "oracles.hpp"

using namespace genescreen;

TEST_CASE("Fisher exact hand examples") {
    // 2/2 vs 0/2: only the extreme tables are as improbable as the observed.
    REQUIRE(fisher_exact_p({2, 0, 2, 2}) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    // The most central table has p = 1.
    REQUIRE(fisher_exact_p({3, 3, 6, 6}) == Catch::Approx(1.0).margin(1e-12));
    // Swapping the groups leaves the p-value unchanged.
    REQUIRE(fisher_exact_p({5, 1, 8, 9}) == Catch::Approx(fisher_exact_p({1, 5, 9, 8})).margin(1e-14));
}

TEST_CASE("Fisher exact matches the exhaustive enumeration oracle") {
    for (std::int64_t n0 = 1; n0 <= 12; ++n0) {
        for (std::int64_t n1 = 1; n1 <= 12; ++n1) {
            for (std::int64_t s0 = 0; s0 <= n0; ++s0) {
                for (std::int64_t s1 = 0; s1 <= n1; ++s1) {
                    const double got = fisher_exact_p({s0, s1, n0, n1});
                    const double want = oracles::fisher_oracle(s0, s1, n0, n1);
                    REQUIRE(got == Catch::Approx(want).margin(1e-12));
                }
            }
        }
    }
}

TEST_CASE("Benjamini-Hochberg step-up") {
    SECTION("worked example") {
        const std::vector<double> p{0.01, 0.02, 0.03, 0.5};
        const BhResult res = bh_adjust(p, 0.05);
        REQUIRE(res.n_rejected == 3);
        REQUIRE(res.rejected == std::vector<std::uint8_t>{1, 1, 1, 0});
        const std::vector<double> expect{0.04, 0.04, 0.04, 0.5};
        for (std::size_t i = 0; i < 4; ++i) {
            REQUIRE(res.adjusted[i] == Catch::Approx(expect[i]).margin(1e-14));
        }
    }
    SECTION("boundary p-values all reject") {
        const double q = 0.05;
        const std::size_t m = 6;
        std::vector<double> p(m);
        for (std::size_t i = 0; i < m; ++i) p[i] = q * double(i + 1) / double(m);
        const BhResult res = bh_adjust(p, q);
        REQUIRE(res.n_rejected == m);
    }
    SECTION("single p-value is its own adjustment") {
        const std::vector<double> p{0.031};
        const BhResult res = bh_adjust(p, 0.05);
        REQUIRE(res.adjusted[0] == Catch::Approx(0.031).margin(1e-15));
        REQUIRE(res.n_rejected == 1);
    }
    SECTION("adjusted values are monotone in the ranked raw values") {
        Rng rng(21);
        std::vector<double> p(40);
        for (auto& x : p) x = rng.uniform();
        const BhResult res = bh_adjust(p, 0.1);
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
        for (std::size_t r = 1; r < order.size(); ++r) {
            REQUIRE(res.adjusted[order[r - 1]] <= res.adjusted[order[r]]);
        }
        // Rejections form a prefix of the sorted order.
        bool seen_keep = false;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (!res.rejected[order[r]]) seen_keep = true;
            if (seen_keep) REQUIRE(!res.rejected[order[r]]);
        }
    }
}

TEST_CASE("Hochberg step-up") {
    SECTION("worked example") {
        const std::vector<double> p{0.01, 0.04};
        const HochbergResult res = hochberg_adjust(p, 0.05);
        REQUIRE(res.n_rejected == 2);
    }
    SECTION("all p equal to one rejects nothing") {
        const std::vector<double> p{1.0, 1.0, 1.0};
        REQUIRE(hochberg_adjust(p, 0.05).n_rejected == 0);
    }
    SECTION("single hypothesis") {
        REQUIRE(hochberg_adjust(std::vector<double>{0.04}, 0.05).n_rejected == 1);
        REQUIRE(hochberg_adjust(std::vector<double>{0.06}, 0.05).n_rejected == 0);
    }
    SECTION("Hochberg rejects at least as much as Bonferroni") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> p(15);
            for (auto& x : p) x = rng.uniform();
            const HochbergResult res = hochberg_adjust(p, 0.1);
            std::size_t bonf = 0;
            for (double x : p) bonf += (x <= 0.1 / 15.0);
            REQUIRE(res.n_rejected >= bonf);
        }
    }
}

TEST_CASE("gene-level Hochberg combination") {
    // min over i of (m - i + 1) p_(i): here min(3*0.02, 2*0.5, 1*0.9) = 0.06.
    REQUIRE(hochberg_gene_pvalue(std::vector<double>{0.5, 0.02, 0.9}) ==
            Catch::Approx(0.06).margin(1e-14));
    REQUIRE(hochberg_gene_pvalue(std::vector<double>{1.0, 1.0}) == 1.0);
    REQUIRE(hochberg_gene_pvalue(std::vector<double>{0.3}) == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("two-step hierarchical testing") {
    SECTION("one gene collapses to overall BH after a global screen") {
        const std::vector<double> p{0.001, 0.002, 0.4, 0.9};
        const GeneIndex index = build_gene_index({"A", "A", "A", "A"});
        const TwoStepResult res = two_step_hierarchical(p, index, 0.05);
        REQUIRE(res.n_genes_selected == 1);
        const BhResult flat = bh_adjust(p, 0.05);
        REQUIRE(res.rejected == flat.rejected);
    }
    SECTION("a gene with all p equal to one is never selected") {
        const std::vector<double> p{1.0, 1.0, 0.001};
        const GeneIndex index = build_gene_index({"A", "A", "B"});
        const TwoStepResult res = two_step_hierarchical(p, index, 0.05);
        REQUIRE(res.gene_selected[0] == 0);
        REQUIRE(res.rejected[0] == 0);
        REQUIRE(res.rejected[1] == 0);
        REQUIRE(res.rejected[2] == 1);
    }
    SECTION("rejections stay inside selected genes") {
        Rng rng(41);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t m = 60;
            std::vector<double> p(m);
            std::vector<std::string> genes(m);
            for (std::size_t i = 0; i < m; ++i) {
                p[i] = std::pow(rng.uniform(), 3.0);
                genes[i] = "G" + std::to_string(rng.uniform_index(12));
            }
            const GeneIndex index = build_gene_index(genes);
            const TwoStepResult res = two_step_hierarchical(p, index, 0.05);
            for (std::size_t g = 0; g < index.n_genes(); ++g) {
                if (res.gene_selected[g]) continue;
                for (std::size_t row : index.genes[g].marker_rows) {
                    REQUIRE(res.rejected[row] == 0);
                }
            }
        }
    }
    SECTION("nothing is rejected when every raw p equals one") {
        const std::vector<double> p{1.0, 1.0, 1.0, 1.0};
        const GeneIndex index = build_gene_index({"A", "A", "B", "B"});
        REQUIRE(bh_adjust(p, 0.05).n_rejected == 0);
        REQUIRE(hochberg_adjust(p, 0.05).n_rejected == 0);
        const TwoStepResult ts = two_step_hierarchical(p, index, 0.05);
        REQUIRE(ts.n_genes_selected == 0);
        for (auto r : ts.rejected) REQUIRE(r == 0);
        for (auto r : per_gene_bh(p, index, 0.05)) REQUIRE(r == 0);
    }
}

TEST_CASE("per-gene BH acts independently within genes") {
    const std::vector<double> p{0.01, 0.9, 0.01, 0.012};
    const GeneIndex index = build_gene_index({"A", "A", "B", "B"});
    const auto rejected = per_gene_bh(p, index, 0.05);
    // Gene A: 0.01 <= 0.05/2 rejects rank 1 only; gene B rejects both.
    REQUIRE(rejected == std::vector<std::uint8_t>{1, 0, 1, 1});
}
