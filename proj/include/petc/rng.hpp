#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace petc {

/// Seeded generator with platform-independent derived draws.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so bounded integers and
/// unit reals are derived here directly from engine output.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform_real();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream identified by a role tag.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role);

/// Seed for the index-th substream of a parent seed (per-trial streams).
std::uint64_t substream_seed(std::uint64_t parent, std::uint64_t index);

}  // namespace petc
