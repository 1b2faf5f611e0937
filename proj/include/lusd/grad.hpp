#pragma once

#include "lusd/config.hpp"
#include "lusd/tensor.hpp"

namespace lusd {

/// Target and source branch noise predictions for one noised latent.
struct NoisePredictionPair {
    GridTensor eps_target;
    GridTensor eps_source;
};

/// Forward noising: sqrt(ab) * z + sqrt(1 - ab) * eps.
GridTensor add_noise(const GridTensor& z, const GridTensor& eps, double alpha_bar_t);

/// Classifier-free guidance: (1 + omega) * cond - omega * uncond.
GridTensor apply_cfg(const GridTensor& cond, const GridTensor& uncond, double omega);

/// Bare score-distillation gradient (no sqrt(alpha_bar) Jacobian factor).
///  SBP, DDS: eps_target - eps_source (the two differ only in how the
///  backend produced eps_source).
///  SDS:      eps_target - eps.
GridTensor raw_gradient(const NoisePredictionPair& pair, const GridTensor& eps, LossMode mode);

/// (1 - lambda) * (mask_hat (.) grad) + lambda * (z - z_src), where the
/// single-channel mask multiplies every channel.
GridTensor blend_regularizer(const GridTensor& grad, const GridTensor& mask_hat,
                             const GridTensor& z, const GridTensor& z_src, double lambda);

}  // namespace lusd
