#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace travel {

// All randomness in the project flows through this wrapper around
// std::mt19937_64. The raw engine is fully specified by the standard and the
// derivations below use only its 64-bit output, so a seed reproduces the same
// stream on every platform (libstdc++ distributions are not portable, hence
// no std::uniform_*_distribution here).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Multiply-high mapping; bias is < 2^-64.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace travel
