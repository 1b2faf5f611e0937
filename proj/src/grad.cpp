#include "lusd/grad.hpp"

#include <cmath>

#include "lusd/error.hpp"

namespace lusd {

GridTensor add_noise(const GridTensor& z, const GridTensor& eps, double alpha_bar_t) {
    require_same_shape(z, eps, "add_noise");
    if (!(alpha_bar_t >= 0.0 && alpha_bar_t <= 1.0)) {
        throw ConfigError("add_noise: alpha_bar outside [0, 1]");
    }
    const double a = std::sqrt(alpha_bar_t);
    const double b = std::sqrt(1.0 - alpha_bar_t);
    GridTensor out(z.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(a * z[i] + b * eps[i]);
    }
    return out;
}

GridTensor apply_cfg(const GridTensor& cond, const GridTensor& uncond, double omega) {
    require_same_shape(cond, uncond, "apply_cfg");
    GridTensor out(cond.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>((1.0 + omega) * cond[i] - omega * uncond[i]);
    }
    return out;
}

GridTensor raw_gradient(const NoisePredictionPair& pair, const GridTensor& eps, LossMode mode) {
    if (mode == LossMode::SDS) {
        require_same_shape(pair.eps_target, eps, "raw_gradient");
        return pair.eps_target - eps;
    }
    require_same_shape(pair.eps_target, pair.eps_source, "raw_gradient");
    return pair.eps_target - pair.eps_source;
}

GridTensor blend_regularizer(const GridTensor& grad, const GridTensor& mask_hat,
                             const GridTensor& z, const GridTensor& z_src, double lambda) {
    require_same_shape(z, z_src, "blend_regularizer");
    require_same_shape(grad, z, "blend_regularizer");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("blend_regularizer: lambda outside [0, 1]");
    GridTensor masked = broadcast_multiply(grad, mask_hat);
    GridTensor out(grad.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>((1.0 - lambda) * masked[i] +
                                    lambda * (static_cast<double>(z[i]) - z_src[i]));
    }
    return out;
}

}  // namespace lusd
