#ifndef ISF_RANDOM_HPP
#define ISF_RANDOM_HPP

#include <cstdint>
#include <limits>

namespace isf {

/// SplitMix64 finalizer. Used for seed derivation and stateless hashing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for work item `index` of a job seeded with `base`. Independent of
/// how items are scheduled, so results do not depend on the worker count.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept
{
    return mix64(base ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Small portable generator (xoshiro256**). The standard distributions are
/// implementation-defined, so uniform draws are done by hand below.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept
    {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            word = mix64(s);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept
    {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    int bit() noexcept { return static_cast<int>((*this)() >> 63); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

/// Additive recurrence with the plastic-number constants (R2 sequence);
/// a low-discrepancy point in the unit square for index n.
inline void r2_point(std::uint64_t n, double offset, double& u, double& v) noexcept
{
    constexpr double g = 1.32471795724474602596;
    constexpr double a1 = 1.0 / g;
    constexpr double a2 = 1.0 / (g * g);
    const double k = static_cast<double>(n);
    u = offset + a1 * k;
    v = offset + a2 * k;
    u -= static_cast<double>(static_cast<std::int64_t>(u));
    v -= static_cast<double>(static_cast<std::int64_t>(v));
}

} // namespace isf

#endif
