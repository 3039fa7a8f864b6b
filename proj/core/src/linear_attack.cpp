#include "puf_forge/linear_attack.hpp"

#include "binary_io.hpp"
#include "puf_forge/gabor.hpp"
#include "puf_forge/metrics.hpp"
#include "puf_forge/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

std::string_view to_string(FeatureKind kind) {
    return kind == FeatureKind::raw ? "raw" : "quadratic";
}

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "raw") return FeatureKind::raw;
    if (text == "quadratic") return FeatureKind::quadratic;
    throw std::invalid_argument("unknown feature kind '" + std::string(text) + "'");
}

std::size_t feature_count(FeatureKind kind, std::size_t bits) {
    return kind == FeatureKind::raw ? bits : quadratic_feature_count(bits);
}

Eigen::RowVectorXd features_of(const Challenge& challenge, FeatureKind kind) {
    if (kind == FeatureKind::quadratic) {
        const std::vector<double> q = quadratic_expand(challenge);
        return Eigen::Map<const Eigen::RowVectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
    }
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(challenge.size()));
    for (std::size_t i = 0; i < challenge.size(); ++i) row(static_cast<Eigen::Index>(i)) = challenge[i];
    return row;
}

Eigen::MatrixXd design_matrix(std::span<const Challenge> challenges, FeatureKind kind) {
    if (challenges.empty()) throw std::invalid_argument("design_matrix: no challenges");
    const std::size_t bits = challenges.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(challenges.size()),
                      static_cast<Eigen::Index>(feature_count(kind, bits)));
    for (std::size_t i = 0; i < challenges.size(); ++i) {
        if (challenges[i].size() != bits)
            throw std::invalid_argument("design_matrix: challenge " + std::to_string(i) +
                                        " has " + std::to_string(challenges[i].size()) +
                                        " bits, expected " + std::to_string(bits));
        x.row(static_cast<Eigen::Index>(i)) = features_of(challenges[i], kind);
    }
    return x;
}

namespace {

std::vector<Challenge> challenges_of(std::span<const Crp> crps) {
    std::vector<Challenge> out;
    out.reserve(crps.size());
    for (const Crp& c : crps) out.push_back(c.challenge);
    return out;
}

void check_training_set(std::span<const Crp> train) {
    if (train.empty()) throw std::invalid_argument("training set is empty");
    const Crp& first = train.front();
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].challenge.size() != first.challenge.size())
            throw std::invalid_argument("training CRP " + std::to_string(i) +
                                        " has a challenge of different length");
        if (train[i].cropped.rows != first.cropped.rows || train[i].cropped.cols != first.cropped.cols)
            throw std::invalid_argument("training CRP " + std::to_string(i) +
                                        " has a response of different size");
    }
    if (first.cropped.empty()) throw std::invalid_argument("training responses are empty");
}

ResidualSummary residuals(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& y) {
    const Eigen::MatrixXd r = fitted - y;
    return {r.squaredNorm() / static_cast<double>(r.size()), r.cwiseAbs().maxCoeff()};
}

RegressionModel assemble(const AffineFit& fit, FeatureKind features, double lambda,
                         const Crp& shape) {
    RegressionModel m;
    m.features = features;
    m.lambda = lambda;
    m.grid_side = shape.challenge.grid_side();
    m.output_rows = shape.cropped.rows;
    m.output_cols = shape.cropped.cols;
    m.coefficients.resize(fit.slopes.rows() + 1, fit.slopes.cols());
    m.coefficients.row(0) = fit.intercept;
    m.coefficients.bottomRows(fit.slopes.rows()) = fit.slopes;
    if (!m.coefficients.allFinite()) throw std::runtime_error("regression produced non-finite coefficients");
    return m;
}

}  // namespace

Eigen::MatrixXd target_matrix(std::span<const Crp> crps) {
    if (crps.empty()) throw std::invalid_argument("target_matrix: no CRPs");
    const auto cols = static_cast<Eigen::Index>(crps.front().cropped.size());
    Eigen::MatrixXd y(static_cast<Eigen::Index>(crps.size()), cols);
    for (std::size_t i = 0; i < crps.size(); ++i) {
        if (static_cast<Eigen::Index>(crps[i].cropped.size()) != cols)
            throw std::invalid_argument("target_matrix: response " + std::to_string(i) + " has a different size");
        y.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(crps[i].cropped.pixels.data(), cols);
    }
    return y;
}

AffineFit solve_least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.rows() == 0)
        throw std::invalid_argument("solve_least_squares: " + std::to_string(x.rows()) +
                                    " design rows vs " + std::to_string(y.rows()) + " target rows");
    AffineFit fit;
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::RowVectorXd y_mean = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::MatrixXd yc = y.rowwise() - y_mean;
    if (x.cols() == 0) {
        fit.slopes.resize(0, y.cols());
    } else {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xc);
        fit.slopes = cod.solve(yc);
    }
    fit.intercept = y_mean - x_mean * fit.slopes;
    return fit;
}

RidgePath::RidgePath(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.rows() == 0)
        throw std::invalid_argument("RidgePath: " + std::to_string(x.rows()) + " design rows vs " +
                                    std::to_string(y.rows()) + " target rows");
    x_mean_ = x.colwise().mean();
    y_mean_ = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double top = s.size() > 0 ? s(0) : 0.0;
    const double tol = top * static_cast<double>(std::max(x.rows(), x.cols())) *
                       std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tol) ++rank;
    singular_ = s.head(rank);
    v_ = svd.matrixV().leftCols(rank);
    uty_ = svd.matrixU().leftCols(rank).transpose() * (y.rowwise() - y_mean_);
}

Eigen::VectorXd RidgePath::shrink(double lambda) const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("ridge penalty must be >= 0");
    return singular_.array() / (singular_.array().square() + lambda);
}

AffineFit RidgePath::fit(double lambda) const {
    AffineFit f;
    f.slopes = v_ * (shrink(lambda).asDiagonal() * uty_);
    f.intercept = y_mean_ - x_mean_ * f.slopes;
    return f;
}

Eigen::MatrixXd RidgePath::predict(const Eigen::MatrixXd& x_new, double lambda) const {
    const Eigen::MatrixXd projected = (x_new.rowwise() - x_mean_) * v_;
    Eigen::MatrixXd out = projected * (shrink(lambda).asDiagonal() * uty_);
    out.rowwise() += y_mean_;
    return out;
}

RegressionModel fit_ols(std::span<const Crp> train, FeatureKind features) {
    check_training_set(train);
    const auto challenges = challenges_of(train);
    const Eigen::MatrixXd x = design_matrix(challenges, features);
    const Eigen::MatrixXd y = target_matrix(train);
    RegressionModel m = assemble(solve_least_squares(x, y), features, 0.0, train.front());
    m.training_residual = residuals(predict_matrix(m, challenges), y);
    return m;
}

RegressionModel fit_ridge(std::span<const Crp> train, FeatureKind features, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("ridge penalty must be >= 0, got " + std::to_string(lambda));
    check_training_set(train);
    const auto challenges = challenges_of(train);
    const Eigen::MatrixXd x = design_matrix(challenges, features);
    const Eigen::MatrixXd y = target_matrix(train);
    RegressionModel m = assemble(RidgePath(x, y).fit(lambda), features, lambda, train.front());
    m.training_residual = residuals(predict_matrix(m, challenges), y);
    return m;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 13; ++i) grid.push_back(std::pow(10.0, -6.0 + 10.0 * i / 12.0));
    return grid;
}

double select_lambda(std::span<const Crp> train, FeatureKind features, std::span<const double> grid,
                     std::uint64_t rng_seed) {
    if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
    for (double l : grid)
        if (!(l >= 0.0)) throw std::invalid_argument("select_lambda: negative penalty in grid");
    if (grid.size() == 1) return grid.front();
    check_training_set(train);
    if (train.size() < 2) return grid.front();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(rng_seed, 0x52494447ULL);
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
    const std::size_t n_val = std::max<std::size_t>(1, train.size() / 10);
    const std::size_t n_fit = train.size() - n_val;

    std::vector<Crp> fit_set, val_set;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_fit ? fit_set : val_set).push_back(train[order[i]]);

    const Eigen::MatrixXd x_fit = design_matrix(challenges_of(fit_set), features);
    const RidgePath path(x_fit, target_matrix(fit_set));
    const Eigen::MatrixXd x_val = design_matrix(challenges_of(val_set), features);
    const GaborKernel kernel = make_kernel(GaborPreset::G1);
    std::vector<BitResponse> truth;
    for (const Crp& c : val_set) truth.push_back(crp_bits(c, GaborPreset::G1));

    const std::size_t rows = train.front().cropped.rows;
    const std::size_t cols = train.front().cropped.cols;
    double best_lambda = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const Eigen::MatrixXd pred = path.predict(x_val, lambda);
        double total = 0.0;
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            ResponseImage img(rows, cols);
            Eigen::Map<Eigen::RowVectorXd>(img.pixels.data(), pred.cols()) = pred.row(i);
            clamp_nonnegative(img);
            total += fhd(gabor_binarize(img, kernel), truth[static_cast<std::size_t>(i)]);
        }
        const double score = total / static_cast<double>(pred.rows());
        if (score < best_score) {
            best_score = score;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

Eigen::MatrixXd predict_matrix(const RegressionModel& model, std::span<const Challenge> challenges) {
    for (const Challenge& c : challenges)
        if (c.size() != model.input_bits())
            throw std::invalid_argument("challenge length " + std::to_string(c.size()) +
                                        " does not match model input " +
                                        std::to_string(model.input_bits()));
    const Eigen::MatrixXd x = design_matrix(challenges, model.features);
    Eigen::MatrixXd out = x * model.coefficients.bottomRows(model.coefficients.rows() - 1);
    out.rowwise() += model.coefficients.row(0);
    return out;
}

ResponseImage predict(const RegressionModel& model, const Challenge& challenge) {
    const Eigen::MatrixXd row = predict_matrix(model, std::span<const Challenge>(&challenge, 1));
    ResponseImage img(model.output_rows, model.output_cols);
    Eigen::Map<Eigen::RowVectorXd>(img.pixels.data(), row.cols()) = row.row(0);
    clamp_nonnegative(img);
    return img;
}

RegressionModel split_coefficients(const RegressionModel& model, std::size_t factor) {
    if (model.features != FeatureKind::raw)
        throw std::invalid_argument("split_coefficients supports raw-feature models only");
    if (factor == 0) throw std::invalid_argument("split factor must be >= 1");
    RegressionModel out = model;
    const std::size_t side = model.grid_side * factor;
    out.grid_side = side;
    out.coefficients.resize(static_cast<Eigen::Index>(side * side + 1), model.coefficients.cols());
    out.coefficients.row(0) = model.coefficients.row(0);
    const double share = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            const std::size_t parent = (r / factor) * model.grid_side + c / factor;
            out.coefficients.row(static_cast<Eigen::Index>(1 + r * side + c)) =
                model.coefficients.row(static_cast<Eigen::Index>(1 + parent)) * share;
        }
    return out;
}

void save_model(const RegressionModel& model, const std::filesystem::path& stem) {
    nlohmann::json header{{"type", "regression"},
                          {"features", to_string(model.features)},
                          {"lambda", model.lambda},
                          {"grid_side", model.grid_side},
                          {"output_rows", model.output_rows},
                          {"output_cols", model.output_cols},
                          {"coefficient_rows", model.coefficients.rows()},
                          {"coefficient_cols", model.coefficients.cols()},
                          {"layout", "row-major little-endian float64, row 0 = intercepts"},
                          {"training_mse", model.training_residual.mse},
                          {"training_max_abs_residual", model.training_residual.max_abs}};
    {
        std::ofstream out(stem.string() + ".json");
        if (!out) throw std::runtime_error("cannot write " + stem.string() + ".json");
        out << header.dump(2) << '\n';
    }
    auto out = detail::open_out(stem.string() + ".f64");
    for (Eigen::Index r = 0; r < model.coefficients.rows(); ++r)
        for (Eigen::Index c = 0; c < model.coefficients.cols(); ++c)
            detail::write_le(out, model.coefficients(r, c));
}

RegressionModel load_model(const std::filesystem::path& stem) {
    std::ifstream in(stem.string() + ".json");
    if (!in) throw std::runtime_error("cannot open " + stem.string() + ".json");
    const nlohmann::json header = nlohmann::json::parse(in);
    RegressionModel m;
    m.features = parse_feature_kind(header.at("features").get<std::string>());
    m.lambda = header.at("lambda").get<double>();
    m.grid_side = header.at("grid_side").get<std::size_t>();
    m.output_rows = header.at("output_rows").get<std::size_t>();
    m.output_cols = header.at("output_cols").get<std::size_t>();
    m.training_residual.mse = header.value("training_mse", 0.0);
    m.training_residual.max_abs = header.value("training_max_abs_residual", 0.0);
    const auto rows = header.at("coefficient_rows").get<Eigen::Index>();
    const auto cols = header.at("coefficient_cols").get<Eigen::Index>();
    if (static_cast<std::size_t>(rows) != feature_count(m.features, m.input_bits()) + 1 ||
        static_cast<std::size_t>(cols) != m.output_rows * m.output_cols)
        throw std::runtime_error(stem.string() + ".json: coefficient shape inconsistent with header");
    m.coefficients.resize(rows, cols);
    auto blob = detail::open_in(stem.string() + ".f64");
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m.coefficients(r, c) = detail::read_le<double>(blob);
    return m;
}

}  // namespace puf_forge
