#pragma once

#include <vector>

namespace lusd {

/// Cumulative signal-retention factors alpha_bar[t] for t in [0, 999].
class NoiseSchedule {
public:
    static constexpr int kTimesteps = 1000;

    /// Validates length, range (0, 1] and strict decrease.
    explicit NoiseSchedule(std::vector<double> alpha_bar);

    double alpha_bar(int t) const;
    const std::vector<double>& values() const noexcept { return alpha_bar_; }

private:
    std::vector<double> alpha_bar_;
};

/// Scaled-linear schedule: sqrt(beta) linear from sqrt(0.00085) to
/// sqrt(0.012) over 1000 steps, alpha_bar[t] = prod_{i<=t} (1 - beta_i).
NoiseSchedule default_schedule();

}  // namespace lusd
