#pragma once

// Shared constants and small utilities used by every cellopt module.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cellopt {

/// Absolute tolerance (seconds or joules) for feasibility of schedules.
inline constexpr double kFeasibilityTol = 1e-6;
/// Guard for numeric comparisons (convexity, domination, pivots).
inline constexpr double kNumericTol = 1e-9;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised on malformed input data (instances, solutions, configs).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Counter-based generator: the i-th draw is splitmix64(seed + i * gamma).
/// Streams for different seeds never share state, so seeding one per worker
/// or per generated instance is safe and reproducible on every platform.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive), rejection sampled.
    std::int64_t integer(std::int64_t lo, std::int64_t hi)
    {
        if (hi <= lo) return lo;
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = max() - max() % span;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Derive an independent stream (e.g. one per worker).
    CounterRng split(std::uint64_t salt) const { return CounterRng(seed_ ^ (salt * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates; std::shuffle is implementation-defined across standard libraries.
template <typename T>
void shuffle(std::vector<T>& items, CounterRng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.index(i)]);
}

inline void hash_combine(std::uint64_t& h, std::uint64_t v)
{
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
}

} // namespace cellopt
