#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace polyalpha {

/// SplitMix64 finalizer. Used to derive well-separated seeds from (master, index, lane).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for replication `index` of a run with `master` seed. `lane` separates the
/// independent streams one replication may own (chain, price, strategy, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t lane = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ index) + lane * 0xD1B54A32D192ED03ULL);
}

enum class Lane : std::uint64_t { chain = 0, price = 1, strategy = 2 };

/// Deterministic random stream. The uniform conversion is done by hand so that
/// draws are bit-identical across standard library implementations.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log argument.
    double uniform_open_left() { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller (one variate per call, the sine branch is discarded).
    double normal() {
        const double u1 = uniform_open_left();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Number of Bernoulli(p) trials up to and including the first success (support 1, 2, ...).
    std::uint64_t geometric(double p) {
        if (p >= 1.0) return 1;
        const double draws = std::floor(std::log(uniform_open_left()) / std::log1p(-p));
        if (draws >= 1.8e19) return UINT64_MAX;
        return 1 + static_cast<std::uint64_t>(draws);
    }

private:
    std::mt19937_64 engine_;
};

inline Stream make_stream(std::uint64_t master, std::uint64_t index, Lane lane = Lane::chain) {
    return Stream(derive_seed(master, index, static_cast<std::uint64_t>(lane)));
}

}  // namespace polyalpha
