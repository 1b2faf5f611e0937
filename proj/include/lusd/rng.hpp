#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "lusd/tensor.hpp"

namespace lusd {

/// Seeded random stream with a portable output sequence.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Distributions are implemented here rather than taken from
/// <random>, since the standard library distributions differ across
/// vendors. Normals use the Box-Muller transform; the second value of each
/// pair is kept for the next draw.
///
/// Single owner: not safe to share between threads.
class RngStream {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64/box-muller/v1";

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [lo, hi], unbiased (rejection sampling).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    double standard_normal();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Tensor of independent N(0, 1) entries.
GridTensor sample_noise(RngStream& rng, Shape shape);

/// Uniform integer timestep in [t_min, t_max]; requires 0 <= t_min <= t_max <= 999.
int sample_timestep(RngStream& rng, int t_min, int t_max);

}  // namespace lusd
