#pragma once

#include "puf_forge/dataset.hpp"
#include "puf_forge/linear_attack.hpp"
#include "puf_forge/metrics.hpp"
#include "puf_forge/neural_attack.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace puf_forge {

// ---- dataset evaluation ----------------------------------------------------

struct PairRow {
    std::size_t a = 0;
    std::size_t b = 0;
    double fhd_g1 = 0.0;
    double fhd_g2 = 0.0;
};

struct EvaluationReport {
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> sampled;   // dataset indices
    std::vector<PairRow> pairs;         // every unordered pair of `sampled`
    std::vector<double> entropies;      // 8-bit entropy of each sampled cropped response
    BoxplotSummary fhd_g1;
    BoxplotSummary fhd_g2;
    BoxplotSummary entropy;
};

/// FHD of all pairs among min(sample_size, count) sampled responses under both
/// presets, plus the entropy of each sampled cropped response.
EvaluationReport evaluate_dataset(const Dataset& dataset, std::size_t sample_size = 300, std::uint64_t seed = 0);

// ---- attacks -----------------------------------------------------------------

enum class AttackKind { lr, ridge, qlr, qrr, generator };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack(std::string_view text);
FeatureKind attack_features(AttackKind kind);

struct GeneratorSettings {
    std::vector<std::size_t> hidden_widths = default_hidden_widths();
    std::size_t resolution = 64;
    TrainOptions training;
};

struct AttackOptions {
    std::vector<double> lambda_grid = default_lambda_grid();
    std::optional<double> lambda;  // skips selection for ridge/qrr
    std::uint64_t seed = 0;
    GeneratorSettings generator;
    std::optional<double> threshold;  // FHD (G1 unless threshold_preset says otherwise)
    GaborPreset threshold_preset = GaborPreset::G1;
};

struct CrpScore {
    std::size_t index = 0;  // dataset index
    double fhd_g1 = 0.0;
    double fhd_g2 = 0.0;
    std::optional<double> pearson;  // undefined when a side is constant
    double ssim = 0.0;
};

struct AttackReport {
    AttackKind kind = AttackKind::lr;
    std::vector<CrpScore> rows;
    BoxplotSummary fhd_g1;
    BoxplotSummary fhd_g2;
    BoxplotSummary pearson;
    BoxplotSummary ssim;
    nlohmann::json model;  // metadata
    std::optional<double> threshold;
    GaborPreset threshold_preset = GaborPreset::G1;
    std::optional<double> fraction_below_threshold;
};

void to_json(nlohmann::json& j, const AttackReport& r);
void from_json(const nlohmann::json& j, AttackReport& r);

/// Recomputes the summaries and threshold verdict from `rows`.
void summarize(AttackReport& report);

struct AttackOutcome {
    AttackReport report;
    std::variant<RegressionModel, GeneratorModel> model;
    std::vector<double> loss_curve;  // generator only
};

/// Scores predictions (already at crop resolution) against the test CRPs.
AttackReport score_predictions(std::span<const Crp> test, std::span<const std::size_t> indices,
                               std::span<const ResponseImage> predictions, AttackKind kind);

/// Fits on the training split and scores every test CRP.
AttackOutcome run_attack(const Dataset& dataset, AttackKind kind, const AttackOptions& options = {});

/// Nearest-neighbour upsampling of a generator output to the crop size.
ResponseImage to_crop_resolution(const ResponseImage& prediction, std::size_t rows, std::size_t cols);

// ---- experiment matrix -------------------------------------------------------

struct MatrixConfig {
    std::vector<std::size_t> sizes{5, 7, 9, 11, 13, 15};
    std::vector<SchemeType> schemes{SchemeType::A, SchemeType::B, SchemeType::C, SchemeType::D};
    std::vector<AttackKind> models{AttackKind::lr};
    PufConfig puf;  // grid_side and seed are overridden per cell
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    AttackOptions attack;
};

void to_json(nlohmann::json& j, const MatrixConfig& c);
MatrixConfig matrix_config_from_json(const nlohmann::json& j);

struct MatrixRow {
    std::size_t grid_side = 0;
    SchemeType scheme = SchemeType::A;
    AttackKind model = AttackKind::lr;
    bool ok = false;
    std::string error;
    double mean_fhd_g1 = 0.0;
    double mean_fhd_g2 = 0.0;
};

struct MatrixResult {
    std::vector<MatrixRow> rows;
    std::vector<AttackReport> reports;  // parallel to rows; empty report on failure
};

/// Cell directory name, e.g. "l05_A".
std::string cell_name(std::size_t grid_side, SchemeType scheme);

/// Dataset a matrix cell (and the equivalent gen-dataset call) uses: seeded
/// from config.seed, quantized to storage precision.
Dataset matrix_cell_dataset(const MatrixConfig& config, std::size_t grid_side, SchemeType scheme);

/// Runs every (size, scheme) cell and every model inside it. Failures are
/// recorded per row and the run continues. If `out_dir` is set each cell's
/// reports are written under out_dir/<cell>/<model>/ and the consolidated
/// table to out_dir/matrix.csv. Cells run in parallel up to PUF_FORGE_THREADS.
MatrixResult run_matrix(const MatrixConfig& config, const std::optional<std::filesystem::path>& out_dir = {});

// ---- scale experiment ----------------------------------------------------------

struct ScaleRow {
    AttackKind model = AttackKind::lr;
    std::size_t train_small = 0;
    std::size_t train_large = 0;
    double fhd_small = 0.0;  // mean test FHD, G1
    double fhd_large = 0.0;
    double improvement_percent = 0.0;  // 100 * (small - large) / small
};

/// Trains each model on both datasets. Throws std::invalid_argument unless the
/// datasets share the PUF configuration (seed included) and scheme.
std::vector<ScaleRow> scale_experiment(const Dataset& small, const Dataset& large,
                                       std::span<const AttackKind> models, const AttackOptions& options = {});

// ---- like/unlike threshold -------------------------------------------------------

struct ThresholdAnalysis {
    GaborPreset preset = GaborPreset::G1;
    std::vector<double> like;
    std::vector<double> unlike;
    double threshold = 0.0;
    std::size_t errors = 0;
};

/// Like pairs: two noisy readouts of one challenge. Unlike pairs: noisy
/// readouts of two different challenges. Uses the PUF's noise_std.
ThresholdAnalysis like_unlike_threshold(const TransmissionMatrix& puf, const Dataset& dataset,
                                        GaborPreset preset, std::size_t pairs, std::uint64_t seed);

}  // namespace puf_forge
