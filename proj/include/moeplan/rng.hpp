// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace moeplan {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG wrapper. All sampling algorithms are spelled out here so
// that identical seeds give bit-identical streams on every platform (the
// std::*_distribution classes are implementation-defined and unsuitable for
// reproducible outputs).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    // Independent substream derived from (seed, stream index).
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed ^ splitmix64(index + 0x51ed2701)));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return double(gen_() >> 11) * 0x1.0p-53; }

    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Box-Muller; draws two units per call, no cached spare.
    double normal() {
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Index sampled proportionally to nonnegative weights.
    std::size_t sample_discrete(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("Rng::sample_discrete: zero total weight");
        double r = unit() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace moeplan
