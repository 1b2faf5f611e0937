#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "lusd/tensor.hpp"

namespace lusd {

/// Attention maps from one forward pass of the target branch, heads already
/// mean-pooled by the backend.
///
/// Self maps are (1, N, N) tensors holding a row-stochastic N x N matrix
/// over the N = side * side positions of the self-attention resolution.
/// Cross maps are (1, s, s) tensors at the cross-attention resolution,
/// keyed by token index in the backend's tokenization of the target prompt.
struct AttentionBundle {
    std::vector<GridTensor> self_maps;
    std::map<int, std::vector<GridTensor>> cross_maps;

    /// Checks shapes, non-negativity and row sums (within 1e-3).
    void validate() const;
};

/// Double-precision single-channel map used inside the mask pipeline.
struct Map2D {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    Map2D() = default;
    Map2D(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}

    static Map2D from_tensor(const GridTensor& t);
    GridTensor to_tensor() const;

    std::size_t size() const noexcept { return values.size(); }
    double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
    double min() const;
    double max() const;
};

struct LayerAverages {
    Map2D self_avg;                  // N x N
    std::map<int, Map2D> cross_avg;  // token -> s x s
};

/// Exponential moving average of the edit-region mask.
struct MaskState {
    Map2D m_ema;  // side x side, entries in [0, 1]
    int k = 0;    // number of updates applied
    bool initialized = false;
};

/// Uniform mean over layers, per kind and per token.
LayerAverages average_layers(const AttentionBundle& bundle);

/// Bilinear resize with half-pixel centers and edge clamping. Outputs are
/// convex combinations of inputs, so the value range is preserved.
Map2D resize_bilinear(const Map2D& map, std::size_t out_h, std::size_t out_w);

/// Upsample an s x s cross map to side x side, where side * side = n_spatial.
Map2D upsample_cross(const Map2D& cross, std::size_t n_spatial);

/// Self-attention exponentiation: self_avg (N x N) times cross (N values),
/// returned as side x side.
Map2D enhance(const Map2D& self_avg, const Map2D& cross);

/// Arithmetic mean over tokens.
Map2D average_tokens(const std::map<int, Map2D>& per_token);

/// (v - min) / (max - min); all ones when max - min < 1e-12.
Map2D minmax_normalize(const Map2D& v);

/// First call stores m_new verbatim, later calls blend (1 - alpha) old + alpha new.
MaskState update_ema(const MaskState& state, const Map2D& m_new, double alpha);

/// beta * m + (1 - beta) * 1.
Map2D blend_identity(const Map2D& m, double beta);

/// Bilinear upsample by an integer factor to the latent's spatial size.
Map2D mask_to_latent_resolution(const Map2D& m, std::size_t height, std::size_t width);

struct MaskOptions {
    double ema_alpha = 0.1;
    bool use_ema = true;
    std::optional<double> beta_fixed;
    std::size_t latent_height = 64;
    std::size_t latent_width = 64;
};

struct MaskResult {
    Map2D mask_hat;  // latent_height x latent_width
    MaskState state;
    double beta = 0.0;
};

/// Full mask pipeline for optimization step k of n_steps (1-based):
/// average layers, upsample cross maps, enhance with self attention,
/// average tokens, min-max normalize, EMA, identity blend with
/// beta = k / n_steps, upsample to latent resolution.
MaskResult compute_mask(const AttentionBundle& bundle, const std::vector<int>& tokens,
                        const MaskState& state, int k, int n_steps, const MaskOptions& opts);

}  // namespace lusd
