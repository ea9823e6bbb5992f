#pragma once

#include <cmath>
#include <cstdint>

namespace rscopt {

/// Counter-based pseudo-random generator. Every draw is a pure function of
/// (seed, stream, counter), so initialization and Monte Carlo loops produce
/// identical values regardless of evaluation order or threading.
struct CounterRng {
    std::uint64_t seed = 0;

    explicit CounterRng(std::uint64_t s = 0) : seed(s) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        return mix(counter + mix(stream + mix(seed)));
    }

    /// Uniform on (0, 1].
    double uniform01(std::uint64_t stream, std::uint64_t counter) const {
        return (static_cast<double>(bits(stream, counter) >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; one value per counter.
    double normal(std::uint64_t stream, std::uint64_t counter) const {
        const double u1 = uniform01(stream, 2 * counter);
        const double u2 = uniform01(stream, 2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

/// Sequential convenience wrapper over CounterRng for code that just needs a
/// stream of values (power iteration starts, Monte Carlo draws, sampling).
struct SeqRng {
    CounterRng rng;
    std::uint64_t stream = 0;
    std::uint64_t n = 0;

    SeqRng(std::uint64_t seed, std::uint64_t stream_id) : rng(seed), stream(stream_id) {}

    std::uint64_t u64() { return rng.bits(stream, n++); }
    double uniform01() { return rng.uniform01(stream, n++); }
    double normal() { return rng.normal(stream, n++); }

    /// Uniform integer in [0, bound) by multiply-shift (bound > 0).
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(u64()) * bound) >> 64);
    }
};

}  // namespace rscopt
