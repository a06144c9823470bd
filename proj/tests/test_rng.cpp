#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "genescreen/rng.hpp"

using namespace genescreen;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.uniform() == b.uniform());
    }
}

TEST_CASE("substreams with different keys differ") {
    Rng a(substream(7, stream_domain::marker, 0));
    Rng b(substream(7, stream_domain::marker, 1));
    int equal = 0;
    for (int i = 0; i < 100; ++i) {
        equal += (a.engine()() == b.engine()());
    }
    REQUIRE(equal == 0);
}

TEST_CASE("uniform stays in [0,1) and has the right mean") {
    Rng rng(3);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    const double se = 1.0 / std::sqrt(12.0 * n);
    REQUIRE(std::abs(sum / n - 0.5) < 3.0 * se);
}

TEST_CASE("uniform_index covers the range uniformly") {
    Rng rng(11);
    std::vector<int> hist(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.uniform_index(7);
        REQUIRE(k < 7);
        hist[k] += 1;
    }
    for (int h : hist) {
        REQUIRE(std::abs(h - n / 7) < 5 * std::sqrt(n / 7.0));
    }
}

TEST_CASE("gamma moments match theory") {
    Rng rng(5);
    const double shape = 2.5;
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gamma(shape);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean - shape) < 3.0 * std::sqrt(shape / n));
    REQUIRE(std::abs(var - shape) < 0.05);
}

TEST_CASE("gamma with shape below one") {
    Rng rng(6);
    const double shape = 0.125;  // matches the default lambda_k for K = 8
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gamma(shape);
    REQUIRE(std::abs(sum / n - shape) < 3.0 * std::sqrt(shape / n));
}

TEST_CASE("beta moments match theory") {
    Rng rng(8);
    const double a = 3.0, b = 7.0;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.beta(a, b);
    const double mean = a / (a + b);
    const double sd = std::sqrt(mean * (1 - mean) / (a + b + 1));
    REQUIRE(std::abs(sum / n - mean) < 3.0 * sd / std::sqrt(n));
}

TEST_CASE("dirichlet draws live on the simplex with the right mean") {
    Rng rng(9);
    const std::vector<double> alpha{1.0, 2.0, 5.0};
    std::vector<double> draw(3), mean(3, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        rng.dirichlet(alpha, draw);
        double total = 0.0;
        for (double x : draw) total += x;
        REQUIRE(std::abs(total - 1.0) < 1e-12);
        for (int k = 0; k < 3; ++k) mean[k] += draw[k];
    }
    for (int k = 0; k < 3; ++k) {
        REQUIRE(std::abs(mean[k] / n - alpha[k] / 8.0) < 0.005);
    }
}

TEST_CASE("categorical respects the weights") {
    Rng rng(10);
    const std::vector<double> w{0.1, 0.6, 0.3};
    std::vector<int> hist(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) hist[rng.categorical(w)] += 1;
    for (int k = 0; k < 3; ++k) {
        const double se = std::sqrt(w[k] * (1 - w[k]) / n);
        REQUIRE(std::abs(hist[k] / double(n) - w[k]) < 4 * se);
    }
}

TEST_CASE("categorical_log matches categorical and rejects all -inf") {
    Rng rng(12);
    std::vector<double> logw{std::log(0.2), std::log(0.8)};
    std::vector<double> scratch;
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += (rng.categorical_log(logw, scratch) == 1);
    REQUIRE(std::abs(ones / double(n) - 0.8) < 0.006);

    std::vector<double> all_inf{-INFINITY, -INFINITY};
    REQUIRE_THROWS_AS(rng.categorical_log(all_inf, scratch), std::runtime_error);
}
