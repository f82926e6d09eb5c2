#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "concurrence/errors.hpp"

namespace concurrence {

/// Deterministic random source. All sampling in the library goes through this
/// wrapper so results depend only on the seed, never on the standard library's
/// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw DataError("uniform_int: empty range");
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % range);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Stream-splitting: a well-mixed child seed for job `stream` of a master
    /// seed. Jobs seeded this way are order-independent, which is what makes
    /// worker-count changes results-neutral.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace concurrence
