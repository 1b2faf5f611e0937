#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lusd/attnmask.hpp"
#include "lusd/config.hpp"
#include "lusd/grad.hpp"
#include "lusd/schedule.hpp"
#include "lusd/tensor.hpp"

namespace lusd {

inline constexpr const char* kProtocolVersion = "lusd-wire/1";

/// One token of the backend's tokenization, with its character span
/// [begin, end) in the tokenized text.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
    int index = 0;
};

struct AttentionSpec {
    std::size_t self_resolution = 32;
    std::size_t cross_resolution = 16;
    int self_layers = 1;
    int cross_layers = 1;
};

struct Capabilities {
    bool encode = true;
    bool decode = true;
    bool attention = true;
    bool embeddings = true;
    bool tokenize = true;
};

struct BackendHandshake {
    std::string protocol_version = kProtocolVersion;
    std::string backend_name;
    Shape latent_shape{4, 64, 64};
    Shape image_shape{3, 512, 512};
    NoiseSchedule schedule = default_schedule();
    AttentionSpec attention;
    Capabilities capabilities;

    /// Checks the resolution relationships the mask pipeline relies on.
    void validate() const;
};

struct PredictRequest {
    GridTensor z_t;
    int t = 0;
    std::string y_tgt;
    std::string y_src;
    double omega = 0.0;
    bool want_attention = false;
    LossMode mode = LossMode::SBP;
    /// Noise used to form z_t; required in DDS and SDS modes.
    std::optional<GridTensor> eps;
};

struct PredictResponse {
    NoisePredictionPair pair;
    /// Target-branch attention; present iff requested.
    std::optional<AttentionBundle> attention;
};

/// A text-conditioned noise predictor with its VAE, tokenizer and
/// image/text embedder. predict() is deterministic for fixed inputs.
///
/// In DDS mode the source branch is evaluated on the source latent noised
/// with the request's eps; the source latent is registered once per edit
/// through begin_session().
class DenoiserBackend {
public:
    virtual ~DenoiserBackend() = default;

    virtual BackendHandshake handshake() = 0;
    virtual GridTensor encode(const GridTensor& image) = 0;
    virtual GridTensor decode(const GridTensor& latent) = 0;
    virtual void begin_session(const GridTensor& z_src) = 0;
    virtual PredictResponse predict(const PredictRequest& request) = 0;
    virtual std::vector<Token> tokenize(const std::string& text) = 0;
    virtual std::vector<float> embed_text(const std::string& text) = 0;
    virtual std::vector<float> embed_image(const GridTensor& image) = 0;

    /// Independent instance for a concurrent run (separate session state).
    virtual std::unique_ptr<DenoiserBackend> clone() const = 0;
};

}  // namespace lusd
