#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lusd/backend.hpp"
#include "lusd/config.hpp"

namespace lusd {

// ---- scalar metrics ------------------------------------------------------

/// Cosine similarity; throws ShapeError on length mismatch or a zero vector.
double cosine(const std::vector<float>& a, const std::vector<float>& b);

/// cos(e_x, e_y) / cos(e_src, e_y); nullopt when the denominator is zero.
std::optional<double> clip_r_from_embeddings(const std::vector<float>& e_x, const std::vector<float>& e_src,
                                             const std::vector<float>& e_y);
std::optional<double> clip_r(const GridTensor& x, const GridTensor& x_src, const std::string& y_tgt,
                             DenoiserBackend& provider);
double clip_t(const GridTensor& x, const std::string& y_local, DenoiserBackend& provider);
double clip_i(const GridTensor& x, const GridTensor& x_ref, DenoiserBackend& provider);

/// Mean absolute per-channel pixel difference.
double l1_distance(const GridTensor& x, const GridTensor& x_ref);

// ---- curves --------------------------------------------------------------

/// Threshold grid lo, lo + step, ..., hi.
struct KGrid {
    double lo = 1.0;
    double hi = 1.22;
    double step = 0.01;
    std::vector<double> points() const;
};

struct CurvePoint {
    double k = 0.0;
    double fraction = 0.0;
};

/// Fraction of scores strictly greater than each k.
std::vector<CurvePoint> success_curve(const std::vector<double>& scores, const std::vector<double>& k_grid);

/// Trapezoidal area under the curve, not divided by the k range.
double clip_auc(const std::vector<CurvePoint>& curve);

struct ThresholdedAuc {
    double value = 0.0;
    double k_lo = 0.0;  // effective range after dropping sparse grid points
    double k_hi = 0.0;
    std::size_t points = 0;
};

/// At each grid k, the mean metric over examples with clip_r > k; grid
/// points with fewer than min_count survivors are dropped; trapezoidal
/// area over the rest. Throws Error when no grid point survives.
ThresholdedAuc thresholded_auc(const std::vector<double>& metric, const std::vector<double>& clip_r,
                               const std::vector<double>& k_grid, std::size_t min_count = 30);

// ---- instruction classes -------------------------------------------------

enum class InstructionKind { Add, Other, Unknown };
const char* to_string(InstructionKind kind);

const std::vector<std::string>& add_keywords();
const std::vector<std::string>& other_keywords();

/// Whole-word, case-insensitive keyword match; Add keywords win.
InstructionKind classify_instruction(const std::string& text);

// ---- benchmark -----------------------------------------------------------

struct EvalExample {
    std::string id;
    std::filesystem::path source_image;
    std::string y_src;
    std::string y_tgt;
    std::optional<std::string> y_local;
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::string> instruction;
    std::vector<std::string> nouns;
};

/// One manifest line: either a parsed example or the reason it was rejected.
struct ManifestEntry {
    std::size_t line = 0;
    std::optional<EvalExample> example;
    std::string error;
};

/// JSON Lines manifest; relative paths resolve against the manifest's
/// directory. Blank lines are skipped; malformed lines become error entries.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct ExampleResult {
    std::string id;
    bool ok = false;
    std::string error;
    std::optional<double> clip_r;
    std::optional<double> clip_t;
    bool y_local_fallback = false;
    std::optional<double> l1_vs_gt;
    std::optional<double> clip_i_vs_gt;
    std::optional<InstructionKind> instruction_kind;
    int accepted_steps = 0;
};

struct EvalReport {
    std::vector<ExampleResult> examples;  // sorted by id
    std::vector<CurvePoint> curve;
    std::optional<double> clip_auc;
    std::optional<ThresholdedAuc> l1_star;
    std::optional<ThresholdedAuc> clip_i_star;
    std::optional<double> mean_clip_t;
    std::optional<double> mean_l1;
    std::vector<std::string> warnings;
    EngineConfig config;
};

struct BenchmarkOptions {
    int workers = 1;
    KGrid grid;
    std::size_t min_count = 30;
    /// Directory for edited images; empty to skip writing them.
    std::filesystem::path image_dir;
};

/// Runs every manifest example with a clone of `prototype` per worker.
/// Per-example failures are recorded, not thrown.
EvalReport run_benchmark(const std::vector<ManifestEntry>& manifest, const EngineConfig& cfg,
                         const DenoiserBackend& prototype, const BenchmarkOptions& opts = {});

nlohmann::json report_json(const EvalReport& report);
/// Writes report.json, report.csv and curve.csv into out_dir.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace lusd
