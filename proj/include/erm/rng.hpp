#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace erm {

/// Seedable random source used everywhere in the library.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform, index and normal draws are derived here rather than
/// through <random> distributions, which are implementation-defined, so a
/// seed reproduces the same stream on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream for (seed, index), e.g. one per Monte-Carlo trial.
    static Rng substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// SplitMix64 finalizer, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

} // namespace erm
