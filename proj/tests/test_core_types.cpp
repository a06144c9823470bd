#include <catch2/catch_amalgamated.hpp>

#include "genescreen/core_types.hpp"
#include "genescreen/rng.hpp"

using namespace genescreen;

namespace {

Dataset minimal_dataset() {
    Dataset d;
    d.n_markers = 2;
    d.n_samples = 4;
    d.values = {0, 1, 0, 1, 1, 1, 0, 0};
    d.marker_ids = {"m1", "m2"};
    d.gene_of_marker = {"A", "A"};
    d.group_labels = {0, 0, 1, 1};
    d.kind = DataKind::Binary;
    return d;
}

}  // namespace

TEST_CASE("well-formed minimal dataset validates") {
    const Dataset d = validate_dataset(minimal_dataset());
    REQUIRE(d.gene_index.n_genes() == 1);
    REQUIRE(d.gene_index.genes[0].marker_rows.size() == 2);
}

TEST_CASE("all-zero labels raise EmptyGroup") {
    Dataset d = minimal_dataset();
    d.group_labels = {0, 0, 0, 0};
    REQUIRE_THROWS_MATCHES(validate_dataset(std::move(d)), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("EmptyGroup")));
}

TEST_CASE("out-of-range values are rejected") {
    Dataset d = minimal_dataset();
    d.kind = DataKind::Continuous01;
    d.values[3] = 1.2;
    REQUIRE_THROWS_MATCHES(validate_dataset(std::move(d)), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("ValueOutOfRange")));

    Dataset b = minimal_dataset();
    b.values[0] = 0.5;
    REQUIRE_THROWS_MATCHES(validate_dataset(std::move(b)), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("ValueOutOfRange")));
}

TEST_CASE("markers without genes raise OrphanMarker") {
    Dataset d = minimal_dataset();
    d.gene_of_marker[1] = "";
    REQUIRE_THROWS_MATCHES(validate_dataset(std::move(d)), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("OrphanMarker")));
}

TEST_CASE("shape mismatches raise DimensionMismatch") {
    Dataset d = minimal_dataset();
    d.values.pop_back();
    REQUIRE_THROWS_MATCHES(validate_dataset(std::move(d)), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("DimensionMismatch")));
}

TEST_CASE("gene index groups rows in first-occurrence order") {
    SECTION("direct grouping") {
        const GeneIndex idx = build_gene_index({"A", "A", "B"});
        REQUIRE(idx.n_genes() == 2);
        REQUIRE(idx.genes[0].gene_id == "A");
        REQUIRE(idx.genes[0].marker_rows == std::vector<std::size_t>{0, 1});
        REQUIRE(idx.genes[1].marker_rows == std::vector<std::size_t>{2});
    }
    SECTION("single marker") {
        const GeneIndex idx = build_gene_index({"A"});
        REQUIRE(idx.n_genes() == 1);
        REQUIRE(idx.genes[0].marker_rows == std::vector<std::size_t>{0});
    }
    SECTION("non-contiguous gene") {
        const GeneIndex idx = build_gene_index({"A", "B", "A"});
        REQUIRE(idx.genes[0].marker_rows == std::vector<std::size_t>{0, 2});
        REQUIRE(idx.genes[1].marker_rows == std::vector<std::size_t>{1});
    }
}

TEST_CASE("gene index partitions the marker rows") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.uniform_index(200);
        std::vector<std::string> genes(m);
        for (auto& g : genes) g = "G" + std::to_string(rng.uniform_index(30));
        const GeneIndex idx = build_gene_index(genes);
        std::size_t total = 0;
        std::vector<bool> seen(m, false);
        for (const auto& gene : idx.genes) {
            REQUIRE(!gene.marker_rows.empty());
            total += gene.marker_rows.size();
            for (std::size_t row : gene.marker_rows) {
                REQUIRE(!seen[row]);
                seen[row] = true;
            }
        }
        REQUIRE(total == m);
    }
}
