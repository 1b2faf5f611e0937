#include "lusd/schedule.hpp"

#include <cmath>
#include <string>

#include "lusd/error.hpp"

namespace lusd {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
    if (alpha_bar_.size() != static_cast<std::size_t>(kTimesteps)) {
        throw ConfigError("noise schedule must have 1000 entries, got " +
                          std::to_string(alpha_bar_.size()));
    }
    for (std::size_t t = 0; t < alpha_bar_.size(); ++t) {
        const double a = alpha_bar_[t];
        if (!(a > 0.0 && a <= 1.0)) {
            throw ConfigError("alpha_bar[" + std::to_string(t) + "] outside (0, 1]");
        }
        if (t > 0 && !(a < alpha_bar_[t - 1])) {
            throw ConfigError("alpha_bar not strictly decreasing at t=" + std::to_string(t));
        }
    }
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t >= kTimesteps) throw ConfigError("timestep out of range: " + std::to_string(t));
    return alpha_bar_[static_cast<std::size_t>(t)];
}

NoiseSchedule default_schedule() {
    const double lo = std::sqrt(0.00085);
    const double hi = std::sqrt(0.012);
    std::vector<double> ab(NoiseSchedule::kTimesteps);
    double prod = 1.0;
    for (int t = 0; t < NoiseSchedule::kTimesteps; ++t) {
        const double s = lo + (hi - lo) * t / (NoiseSchedule::kTimesteps - 1);
        prod *= 1.0 - s * s;
        ab[static_cast<std::size_t>(t)] = prod;
    }
    return NoiseSchedule(std::move(ab));
}

}  // namespace lusd
