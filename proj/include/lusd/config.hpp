#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lusd {

enum class LossMode { SBP, DDS, SDS };

/// How the per-element gradient maps onto the SGD step.
///  - SpatialMean: the distillation loss is summed over the latent and
///    divided by its spatial size H*W, so the effective step is lr/(H*W).
///  - Sum: the step is literally lr times the normalized gradient.
enum class GradReduction { SpatialMean, Sum };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);
std::string_view to_string(GradReduction r);
GradReduction parse_grad_reduction(std::string_view text);

/// Every hyperparameter of the optimization loop and the mask pipeline.
struct EngineConfig {
    int steps = 300;
    double lr = 2000.0;
    double lambda = 0.02;
    double ema_alpha = 0.1;
    double eta0 = 0.01;
    double eta_decay = 0.99;
    double gamma_lo = 0.01;
    double gamma_hi = 0.15;
    double gamma_span = 5.0;
    int t_min = 50;
    int t_max = 950;
    double cfg_omega = 0.0;
    LossMode loss_mode = LossMode::SBP;
    int max_resamples = 100;
    std::uint64_t seed = 0;

    bool use_mask = true;
    bool use_ema = true;
    bool use_filter = true;
    bool use_normalize = true;
    bool use_anneal = true;

    GradReduction grad_reduction = GradReduction::SpatialMean;
    /// When set, replaces the linear k/N ramp of the identity blend.
    std::optional<double> beta_fixed;
    /// Write a PGM snapshot of the mask every this many steps (0 = never).
    int mask_dump_every = 0;
    std::string mask_dump_dir;

    /// Throws ConfigError on any violated invariant.
    void validate() const;

    /// Threshold actually used by the filter (0 when filtering is ablated).
    double effective_eta0() const noexcept { return use_filter ? eta0 : 0.0; }
    /// Regularizer weight actually used (0 when spatial regularization is ablated).
    double effective_lambda() const noexcept { return use_mask ? lambda : 0.0; }
};

/// Names of all keys accepted by set_config_value, in declaration order.
const std::vector<std::string>& config_keys();

/// Assign one field from its textual value. Unknown keys and unparsable
/// values raise ConfigError.
void set_config_value(EngineConfig& cfg, std::string_view key, std::string_view value);

/// Textual value of a field, in the form accepted by set_config_value.
std::string get_config_value(const EngineConfig& cfg, std::string_view key);

/// Parse a flat `key = value` document (TOML subset: comments, quoted
/// strings, numbers, booleans) and apply it on top of `cfg`.
void apply_config_text(EngineConfig& cfg, std::string_view text);
void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path);

/// Render the configuration in the same flat format.
std::string to_config_text(const EngineConfig& cfg);

}  // namespace lusd
