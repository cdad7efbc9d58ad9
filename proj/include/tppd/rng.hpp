#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <tppd/error.hpp>

namespace tppd {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Deterministic random stream. All sampling is implemented on top of raw
/// mt19937_64 draws so that results do not depend on the standard library's
/// distribution internals. Substreams are derived from a root seed plus a
/// stream name (and optional indices), so independent parts of a run
/// (predictor, agent, tasks, policy) never share a stream.
class rng {
public:
    explicit rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    static rng substream(std::uint64_t root, std::string_view name,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t h = splitmix64(root ^ fnv1a(name));
        h = splitmix64(h ^ a);
        h = splitmix64(h ^ b);
        return rng(h);
    }

    std::uint64_t next() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        require(lo <= hi, "rng::uniform_int: empty range");
        std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0)
            return static_cast<std::int64_t>(gen_()); // full 64-bit range
        // Debiased multiply-shift (Lemire).
        while (true) {
            std::uint64_t x = gen_();
            __uint128_t m = static_cast<__uint128_t>(x) * range;
            std::uint64_t l = static_cast<std::uint64_t>(m);
            if (l >= range) return lo + static_cast<std::int64_t>(m >> 64);
            std::uint64_t t = (0 - range) % range;
            if (l >= t) return lo + static_cast<std::int64_t>(m >> 64);
        }
    }

    /// Standard normal via Box-Muller (pair cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    /// Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace tppd
