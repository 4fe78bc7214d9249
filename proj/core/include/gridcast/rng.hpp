#pragma once

#include <cstdint>
#include <utility>

namespace gridcast {

// splitmix64: the standard 64-bit mixer used to expand one master seed
// into independent per-sample streams.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream seed for sample i derived from the master seed. Documented rule:
// seed_i = splitmix64(master + (i+1) * golden_gamma).
inline uint64_t sample_seed(uint64_t master, uint64_t i) {
    return splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15ULL);
}

// Small deterministic 64-bit generator (xorshift-star seeded via splitmix64).
// We avoid std::uniform_int_distribution because its output is
// implementation-defined; pool files must be byte-identical everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0xD1B54A32D192ED03ULL)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    uint64_t next() {
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform integer in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

// Unrank u in [0, n*(n-1)/2) to an unordered pair (a, b), a < b < n.
inline std::pair<int, int> unrank_pair(uint64_t u, int n) {
    // Row a holds (n-1-a) pairs.
    int a = 0;
    uint64_t remaining = u;
    while (remaining >= static_cast<uint64_t>(n - 1 - a)) {
        remaining -= static_cast<uint64_t>(n - 1 - a);
        ++a;
    }
    return {a, a + 1 + static_cast<int>(remaining)};
}

}  // namespace gridcast
