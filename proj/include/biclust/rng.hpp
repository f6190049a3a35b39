#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>

namespace biclust {

/// Counter-based random generator. The i-th draw of a stream is a pure
/// function of (key, i), so streams can be replayed, split and evaluated in
/// any order while staying bit-reproducible. Sub-streams are derived by
/// hashing a tag into the key; sibling sub-streams are statistically
/// independent regardless of how much each one is consumed.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix(key_, counter_++); }

    /// Uniform on [0,1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second value of each pair is cached.
    double next_gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0,1] so the log is finite.
        const double u1 = 1.0 - next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(t);
        has_cached_ = true;
        return r * std::cos(t);
    }

    /// Uniform integer in {0, ..., n-1}; modulo-rejection keeps it exact.
    std::uint64_t next_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    /// Fisher-Yates; self-contained so shuffles are reproducible across
    /// standard libraries.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derived stream; independent of this stream's counter position.
    [[nodiscard]] CounterRng substream(std::uint64_t tag) const {
        return CounterRng(mix(key_ ^ 0x6A09E667F3BCC909ULL, tag));
    }

    [[nodiscard]] CounterRng substream(std::string_view name) const {
        std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
        for (const char c : name) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001B3ULL;
        }
        return substream(h);
    }

    [[nodiscard]] CounterRng substream(std::string_view name,
                                       std::uint64_t index) const {
        return substream(name).substream(index);
    }

    // UniformRandomBitGenerator interface.
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }
    result_type operator()() { return next_u64(); }

private:
    // Two SplitMix64 finalizer rounds over a keyed counter.
    static std::uint64_t mix(std::uint64_t key, std::uint64_t counter) {
        std::uint64_t z = key + 0x9E3779B97F4A7C15ULL * (counter + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        z += key ^ 0xD1B54A32D192ED03ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace biclust
