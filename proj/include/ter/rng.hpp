#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ter {

// Deterministic randomness helpers. std::mt19937_64 output is fully specified
// by the standard; the distribution adapters in <random> are not, so draws go
// through explicit mappings here to keep outputs identical everywhere.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used for stable string hashing (fold splits, fingerprints).
inline std::uint64_t hash_bytes(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-high bounding, deterministic.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // k distinct indices from [0, n), order randomized (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    // Uniform Dirichlet sample (normalized exponentials).
    std::vector<double> uniform_simplex(std::size_t n) {
        std::vector<double> u(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = uniform01();
            if (x <= 0.0) x = 0x1.0p-53;
            u[i] = -std::log(x);
            total += u[i];
        }
        for (double& v : u) v /= total;
        return u;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace ter
