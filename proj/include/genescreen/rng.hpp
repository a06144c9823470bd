// Deterministic random number generation for the screening engine.
//
// All stochastic code in this library draws from xoshiro256++ engines whose
// seeds are derived from a master seed plus a stream key (marker row, gene id
// hash, chain index).  Each marker and each gene owns its own persistent
// substream, so results are bit-identical at any worker count and invariant
// to iteration order.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace genescreen {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna). Small state, fast, passes BigCrush.
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    Xoshiro256pp() : Xoshiro256pp(0xdeadbeefcafef00dULL) {}

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_;
};

// Stable 64-bit hash for string stream keys (FNV-1a).
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives an engine for (master seed, domain tag, key).  Mixing through
// splitmix64 keeps nearby keys decorrelated.
inline Xoshiro256pp substream(std::uint64_t master, std::uint64_t domain, std::uint64_t key) {
    std::uint64_t s = master;
    std::uint64_t mixed = splitmix64(s) ^ (domain * 0x9e3779b97f4a7c15ULL);
    mixed = mixed * 0xff51afd7ed558ccdULL + key;
    std::uint64_t s2 = mixed;
    return Xoshiro256pp(splitmix64(s2));
}

// Stream domain tags.
namespace stream_domain {
inline constexpr std::uint64_t marker = 1;
inline constexpr std::uint64_t gene = 2;
inline constexpr std::uint64_t chain = 3;
inline constexpr std::uint64_t scenario = 4;
inline constexpr std::uint64_t replicate = 5;
}  // namespace stream_domain

class Rng {
  public:
    Rng() = default;
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    explicit Rng(Xoshiro256pp engine) : engine_(engine) {}

    Xoshiro256pp& engine() { return engine_; }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in {0, ..., n-1}; n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Lemire's multiply-shift rejection method.
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0ULL - n) % n;
            while (lo < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via the Marsaglia polar method (no cached spare, so the
    // draw count is a deterministic function of the engine state).
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Gamma(shape, 1) via Marsaglia-Tsang, with the standard boost for
    // shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma shape must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        const double s = x + y;
        if (s <= 0.0) return 0.5;
        return x / s;
    }

    void dirichlet(std::span<const double> alpha, std::span<double> out) {
        double sum = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            out[k] = gamma(alpha[k]);
            sum += out[k];
        }
        if (sum <= 0.0) {
            const double w = 1.0 / static_cast<double>(alpha.size());
            for (auto& x : out) x = w;
            return;
        }
        for (auto& x : out) x /= sum;
    }

    // Index drawn proportional to non-negative weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            u -= weights[k];
            if (u < 0.0) return k;
        }
        return weights.size() - 1;
    }

    // Index drawn proportional to exp(logw) using log-sum-exp for stability.
    std::size_t categorical_log(std::span<const double> logw, std::vector<double>& scratch) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double w : logw) mx = std::max(mx, w);
        if (!std::isfinite(mx)) {
            throw std::runtime_error("categorical_log: all weights are -inf");
        }
        scratch.resize(logw.size());
        for (std::size_t k = 0; k < logw.size(); ++k) scratch[k] = std::exp(logw[k] - mx);
        return categorical(scratch);
    }

  private:
    Xoshiro256pp engine_;
};

}  // namespace genescreen
