#include "lusd/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lusd/error.hpp"
#include "lusd/schedule.hpp"

namespace lusd {

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ConfigError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
}

double RngStream::standard_normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
}

GridTensor sample_noise(RngStream& rng, Shape shape) {
    GridTensor out(shape);
    for (float& v : out.data()) v = static_cast<float>(rng.standard_normal());
    return out;
}

int sample_timestep(RngStream& rng, int t_min, int t_max) {
    if (t_min < 0 || t_max >= NoiseSchedule::kTimesteps || t_min > t_max) {
        throw ConfigError("timestep range [" + std::to_string(t_min) + ", " +
                          std::to_string(t_max) + "] outside [0, 999]");
    }
    return static_cast<int>(rng.uniform_int(t_min, t_max));
}

}  // namespace lusd
