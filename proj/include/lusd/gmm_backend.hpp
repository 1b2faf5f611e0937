#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lusd/backend.hpp"

namespace lusd {

/// Half-open rectangle [y0, y1) x [x0, x1) in latent pixels.
struct Region {
    std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;

    bool contains(std::size_t y, std::size_t x) const noexcept {
        return y >= y0 && y < y1 && x >= x0 && x < x1;
    }
    std::size_t area() const noexcept { return (y1 - y0) * (x1 - x0); }
};

struct GmmComponent {
    GridTensor mean;
    double sigma = 0.0;
    double weight = 1.0;
    Region region;
    std::string class_label;
};

/// Member of a prompt's mixture. Weights within a conditional sum to 1.
struct ConditionalEntry {
    std::size_t component = 0;
    double weight = 1.0;
};

/// A mixture of isotropic Gaussians over latents, standing in for the
/// diffusion prior. Each prompt ("label") selects a weighted subset of
/// components. Component weights define the unconditional mixture.
struct GmmWorld {
    Shape latent_shape{4, 64, 64};
    std::size_t image_scale = 8;  // image pixels per latent pixel
    AttentionSpec attention{32, 16, 1, 1};
    std::vector<GmmComponent> components;
    std::map<std::string, std::vector<ConditionalEntry>> conditionals;

    void validate() const;

    /// The prompt's mixture; the empty label selects unconditional().
    /// Throws BackendError("unknown_label") for other unknown prompts.
    std::vector<ConditionalEntry> conditional(const std::string& label) const;
    /// Every component with its own weight, normalized.
    std::vector<ConditionalEntry> unconditional() const;

    /// Sorted unique class labels; defines the embedding basis.
    std::vector<std::string> class_labels() const;
};

/// Canonical lookup form of a prompt: lowercase, single spaces, trimmed.
std::string normalize_label(const std::string& text);

/// exp(log_w - logsumexp(log_w)); stable for any common offset.
std::vector<double> normalize_log_weights(const std::vector<double>& log_w);

/// Posterior responsibilities of the label's components given z_t.
std::vector<double> gmm_responsibilities(const GmmWorld& world, const GridTensor& z_t,
                                         double alpha_bar, const std::string& label);

/// Exact posterior-mean noise prediction E[eps | z_t] under the label's
/// mixture. Requires alpha_bar in (0, 1).
GridTensor gmm_predict(const GmmWorld& world, const GridTensor& z_t, double alpha_bar,
                       const std::string& label);

/// Synthetic attention for the given tokens. Cross maps are Gaussian bumps
/// centered on the regions of the components whose class label matches the
/// token, scaled by (1 + responsibility). Self maps are a row-normalized
/// local smoothing kernel. With `strict`, a token without a region is an
/// error; otherwise it receives a flat map.
AttentionBundle gmm_attention(const GmmWorld& world, const GridTensor& z_t, double alpha_bar,
                              const std::string& label, const std::vector<Token>& tokens,
                              bool strict = true);

/// Row-stochastic smoothing kernel over a side x side grid, as (1, N, N).
/// Results are memoized per (side, bandwidth).
GridTensor smoothing_self_map(std::size_t side, double bandwidth);

/// Log posterior of the components carrying `class_label` within the
/// label's mixture, evaluated on a clean latent (no diffusion noise).
double class_log_posterior(const GmmWorld& world, const GridTensor& z, const std::string& label,
                           const std::string& class_label);

/// Two-class fixture used by the demo-world command, the examples and the
/// tests. Latent (4, 64, 64). Classes "meadow" (sigma 0.3, whole grid),
/// "cat" (region rows 16-31, cols 8-23) and "dog" (rows 36-51, cols
/// 40-55); the object components carry sigma 0.6 and add a smooth
/// per-channel offset inside their region. Prompts:
///   "a photo of a meadow"               meadow 0.8, cat 0.1, dog 0.1
///   "a photo of a meadow with a cat"    cat 0.9, meadow 0.1
///   "a photo of a meadow with a dog"    dog 0.9, meadow 0.1
GmmWorld make_demo_world();

/// Prompts of the demo world.
inline constexpr const char* kDemoSourcePrompt = "a photo of a meadow";
inline constexpr const char* kDemoCatPrompt = "a photo of a meadow with a cat";
inline constexpr const char* kDemoDogPrompt = "a photo of a meadow with a dog";

nlohmann::json world_to_json(const GmmWorld& world);
GmmWorld world_from_json(const nlohmann::json& j);
GmmWorld load_world(const std::filesystem::path& path);
void save_world(const std::filesystem::path& path, const GmmWorld& world);

/// In-process backend over a GmmWorld.
///
/// VAE: each latent pixel covers an image_scale square block. Channels 0-2
/// hold the block's mean RGB mapped by v = 4 (p - 0.5); channel 3 holds
/// 4 x the left-minus-right half difference averaged over RGB. Decoding
/// clamps to [0, 1]; encode(decode(z)) == z up to float rounding whenever
/// no pixel clamps. Tokenizer: whitespace words with a BOS token at index 0.
/// Embeddings: one orthonormal basis vector per class label plus one
/// "unknown" axis; text embeds the labels it names, images embed per-class
/// region fit scores. Synthetic, documented for tests only.
class GmmBackend final : public DenoiserBackend {
public:
    explicit GmmBackend(GmmWorld world);

    const GmmWorld& world() const noexcept { return *world_; }

    BackendHandshake handshake() override;
    GridTensor encode(const GridTensor& image) override;
    GridTensor decode(const GridTensor& latent) override;
    void begin_session(const GridTensor& z_src) override;
    PredictResponse predict(const PredictRequest& request) override;
    std::vector<Token> tokenize(const std::string& text) override;
    std::vector<float> embed_text(const std::string& text) override;
    std::vector<float> embed_image(const GridTensor& image) override;
    std::unique_ptr<DenoiserBackend> clone() const override;

private:
    std::shared_ptr<const GmmWorld> world_;
    NoiseSchedule schedule_ = default_schedule();
    std::optional<GridTensor> z_src_;
};

}  // namespace lusd
