#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/crp.hpp"
#include "puf_forge/image.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace puf_forge {

enum class FeatureKind { raw, quadratic };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

std::size_t feature_count(FeatureKind kind, std::size_t bits);

/// Feature row of one challenge (raw bits or quadratic_expand).
Eigen::RowVectorXd features_of(const Challenge& challenge, FeatureKind kind);

/// One row per challenge, no intercept column.
Eigen::MatrixXd design_matrix(std::span<const Challenge> challenges, FeatureKind kind);

/// One row per CRP: the cropped image flattened row-major.
Eigen::MatrixXd target_matrix(std::span<const Crp> crps);

struct ResidualSummary {
    double mse = 0.0;
    double max_abs = 0.0;
};

/// Affine per-pixel model. Row 0 of `coefficients` holds the intercepts,
/// rows 1..F the slopes of each feature; one column per output pixel.
struct RegressionModel {
    FeatureKind features = FeatureKind::raw;
    double lambda = 0.0;
    std::size_t grid_side = 0;
    std::size_t output_rows = 0;
    std::size_t output_cols = 0;
    Eigen::MatrixXd coefficients;
    ResidualSummary training_residual;

    std::size_t input_bits() const { return grid_side * grid_side; }
    std::size_t feature_count() const { return static_cast<std::size_t>(coefficients.rows()) - 1; }
};

// Matrix-level solvers. Both keep the intercept out of the minimum-norm /
// penalty term: data are centered, slopes solved, intercept = mean(Y) - mean(X) slopes.

struct AffineFit {
    Eigen::RowVectorXd intercept;
    Eigen::MatrixXd slopes;  // features x outputs
};

/// Least squares via complete orthogonal decomposition; rank-deficient
/// systems get the minimum-norm slopes.
AffineFit solve_least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Ridge regression for any number of penalties from one thin SVD of the
/// centered design.
class RidgePath {
public:
    RidgePath(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

    AffineFit fit(double lambda) const;
    /// Predictions for new rows without materializing the slopes.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x_new, double lambda) const;

private:
    Eigen::VectorXd shrink(double lambda) const;

    Eigen::RowVectorXd x_mean_;
    Eigen::RowVectorXd y_mean_;
    Eigen::MatrixXd v_;        // features x rank
    Eigen::VectorXd singular_;
    Eigen::MatrixXd uty_;      // rank x outputs
};

/// Throws std::invalid_argument on empty input or inconsistent dimensions.
RegressionModel fit_ols(std::span<const Crp> train, FeatureKind features);

/// lambda = 0 reproduces fit_ols. Throws std::invalid_argument for lambda < 0.
RegressionModel fit_ridge(std::span<const Crp> train, FeatureKind features, double lambda);

/// 13 log-spaced penalties from 1e-6 to 1e4.
std::vector<double> default_lambda_grid();

/// Holds out 10% of `train` (seeded shuffle) and returns the grid value with the
/// lowest mean validation FHD under kernel G1; ties go to the earlier grid entry.
double select_lambda(std::span<const Crp> train, FeatureKind features,
                     std::span<const double> grid, std::uint64_t rng_seed = 0);

/// Affine map without clamping, one row per challenge.
Eigen::MatrixXd predict_matrix(const RegressionModel& model, std::span<const Challenge> challenges);

/// Predicted cropped image, negative intensities clamped to 0.
ResponseImage predict(const RegressionModel& model, const Challenge& challenge);

/// Model for split_blocks(challenge, factor): every slope is shared equally
/// among its factor^2 replicated inputs. Raw-feature models only.
RegressionModel split_coefficients(const RegressionModel& model, std::size_t factor);

/// `<stem>.json` header plus `<stem>.f64` raw little-endian coefficients (row-major).
void save_model(const RegressionModel& model, const std::filesystem::path& stem);
RegressionModel load_model(const std::filesystem::path& stem);

}  // namespace puf_forge
