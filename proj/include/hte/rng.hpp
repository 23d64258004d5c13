#pragma once

// Deterministic, platform-independent random streams and seed derivation.
//
// Every random quantity in a study is drawn from a SplitMix64 stream whose
// seed is a hash of (master seed, replication, split, mining round). The
// standard library distributions are not used because their output is
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

namespace hte {

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hashes an ordered list of words into one 64-bit seed.
constexpr std::uint64_t mix64(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) noexcept {
    constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    std::uint64_t h = splitmix64_mix(master + kGolden);
    h = splitmix64_mix(h ^ splitmix64_mix(a + 2 * kGolden));
    h = splitmix64_mix(h ^ splitmix64_mix(b + 3 * kGolden));
    h = splitmix64_mix(h ^ splitmix64_mix(c + 4 * kGolden));
    return h;
}

/// Coordinates of one randomized step inside a study.
///
/// `split` is 0 for single-split procedures and 1..S for the splits of a
/// multi-split procedure; `mining` is 0 for an honest run and 1..F for the
/// rounds of a mining researcher. The dataset of replication r uses the
/// reserved split index kDataSplit.
struct SeedKey {
    static constexpr std::uint64_t kDataSplit = std::numeric_limits<std::uint64_t>::max();

    std::uint64_t master = 0;
    std::uint64_t replication = 0;
    std::uint64_t split = 0;
    std::uint64_t mining = 0;

    [[nodiscard]] constexpr std::uint64_t value() const noexcept {
        return mix64(master, replication, split, mining);
    }
    [[nodiscard]] constexpr SeedKey with_split(std::uint64_t s) const noexcept {
        SeedKey k = *this;
        k.split = s;
        return k;
    }
    [[nodiscard]] constexpr SeedKey with_mining(std::uint64_t f) const noexcept {
        SeedKey k = *this;
        k.mining = f;
        return k;
    }
    [[nodiscard]] static constexpr SeedKey data(std::uint64_t master,
                                                std::uint64_t replication) noexcept {
        return SeedKey{master, replication, kDataSplit, 0};
    }
    /// Wraps a bare user seed as the root of a key hierarchy.
    [[nodiscard]] static constexpr SeedKey root(std::uint64_t seed) noexcept {
        return SeedKey{seed, 0, 0, 0};
    }

    friend constexpr bool operator==(const SeedKey&, const SeedKey&) = default;
};

/// SplitMix64 generator with uniform, normal and bounded-integer helpers.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <class T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace hte
