#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lusd/attnmask.hpp"
#include "lusd/backend.hpp"
#include "lusd/config.hpp"
#include "lusd/promptdiff.hpp"
#include "lusd/rng.hpp"
#include "lusd/stabilize.hpp"

namespace lusd {

inline constexpr const char* kTelemetrySchema = "lusd-telemetry/1";

struct EditRequest {
    GridTensor source_image;  // (3, H, W), values in [0, 1]
    std::string y_src;
    std::string y_tgt;
    /// Explicit edit nouns; bypasses prompt diffing when non-empty.
    std::vector<std::string> nouns;
    EngineConfig config;
};

/// One optimization step. A skipped step (every draw rejected) leaves z
/// unchanged and carries accepted = false.
struct StepRecord {
    int k = 0;
    int t = 0;
    double grad_std = 0.0;    // std of the last raw gradient drawn
    double eta = 0.0;         // threshold at the final test of the step
    int rejections = 0;
    double gamma = 0.0;
    double beta = 0.0;
    bool accepted = false;
    bool noop = false;        // accepted but degenerate normalization
    double mask_min = 1.0;
    double mask_max = 1.0;
    double mask_mean = 1.0;
    double update_std = 0.0;  // std of the applied step lr_eff * normalized gradient

    bool operator==(const StepRecord&) const = default;
};

struct EditResult {
    GridTensor source_latent;
    GridTensor final_latent;
    GridTensor image;
    std::vector<StepRecord> telemetry;
    DiffResult diff;
    std::string backend_name;
    double wall_seconds = 0.0;
};

/// Step size applied to the normalized gradient under the config's
/// gradient reduction.
double effective_lr(const EngineConfig& cfg, const Shape& latent_shape);

/// Optimization state of one edit. Steps run strictly in order; after a
/// backend failure the telemetry of completed steps stays available.
class EditSession {
public:
    /// Handshake, encode the source, derive the edit tokens and register the
    /// source latent with the backend in DDS mode.
    EditSession(const EditRequest& request, DenoiserBackend& backend);

    bool done() const noexcept { return k_ >= config_.steps; }
    /// Runs step k + 1 and returns its record.
    const StepRecord& run_step();

    int step() const noexcept { return k_; }
    const GridTensor& z() const noexcept { return z_; }
    const GridTensor& z_src() const noexcept { return z_src_; }
    const MaskState& mask_state() const noexcept { return mask_state_; }
    const std::vector<StepRecord>& telemetry() const noexcept { return telemetry_; }
    const DiffResult& diff() const noexcept { return diff_; }
    const BackendHandshake& handshake() const noexcept { return handshake_; }
    /// Mask applied at the most recent accepted step (latent resolution).
    const std::optional<Map2D>& last_mask() const noexcept { return last_mask_; }

private:
    DenoiserBackend& backend_;
    EngineConfig config_;
    std::string y_src_;
    std::string y_tgt_;
    BackendHandshake handshake_;
    DiffResult diff_;
    GridTensor z_src_;
    GridTensor z_;
    RngStream rng_;
    FilterState filter_;
    MaskState mask_state_;
    std::optional<Map2D> last_mask_;
    std::vector<StepRecord> telemetry_;
    double lr_eff_ = 0.0;
    int k_ = 0;
};

/// Full edit: all steps, then decode.
EditResult run_edit(const EditRequest& request, DenoiserBackend& backend);

/// Telemetry document (schema kTelemetrySchema). Wall time is omitted so
/// seeded replays serialize identically.
nlohmann::json telemetry_json(const EditResult& result, const EngineConfig& cfg);

}  // namespace lusd
