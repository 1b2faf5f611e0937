#pragma once

#include "lusd/config.hpp"
#include "lusd/tensor.hpp"

namespace lusd {

/// Population standard deviation over every element (divisor = count).
/// Requires at least two elements.
double grad_std(const GridTensor& g);

/// Threshold state of the bad-gradient filter within one optimization step.
class FilterState {
public:
    FilterState(double eta0, double eta_decay);

    enum class Verdict { Accept, Reject };

    /// Accept iff std >= eta. A rejection decays eta; an acceptance resets
    /// eta to eta0 and the rejection count to zero for the next step.
    Verdict test_and_decay(double std);

    /// Start a new optimization step without an acceptance (skipped step).
    void reset() noexcept;

    double eta() const noexcept { return eta_; }
    double eta0() const noexcept { return eta0_; }
    int rejections() const noexcept { return rejections_; }

private:
    double eta0_;
    double eta_decay_;
    double eta_;
    int rejections_ = 0;
};

/// Reverse-sigmoid step scale for step k in [1, n_steps]:
/// x = -span + 2 span (k - 1)/(n_steps - 1), gamma = lo + (hi - lo)(1 - sigmoid(x)).
/// Returns 1 when annealing is disabled.
double gamma_at(int k, int n_steps, const EngineConfig& cfg);

struct NormalizedGradient {
    GridTensor grad;
    /// Set when the input had (numerically) zero spread and the output is zero.
    bool noop = false;
};

/// gamma * g / grad_std(g), or gamma * g when normalization is disabled.
NormalizedGradient normalize_and_scale(const GridTensor& g, double gamma, bool use_normalize = true);

}  // namespace lusd
