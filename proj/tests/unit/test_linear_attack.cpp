#include "puf_forge/linear_attack.hpp"
#include "puf_forge/metrics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace puf_forge;
using puf_forge::testing::simulate;
using puf_forge::testing::small_puf;
using puf_forge::testing::TempDir;

namespace {

std::vector<Challenge> draw(std::size_t l, std::size_t count, std::uint64_t seed, SchemeType s = SchemeType::A) {
    return generate(l, s, count, seed);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double mean_fhd(const RegressionModel& model, std::span<const Crp> test, GaborPreset preset) {
    const GaborKernel k = make_kernel(preset);
    double total = 0.0;
    for (const Crp& c : test) total += fhd(gabor_binarize(predict(model, c.challenge), k), gabor_binarize(c.cropped, k));
    return total / static_cast<double>(test.size());
}

}  // namespace

TEST(Features, DesignMatrixShapes) {
    const auto chs = draw(3, 4, 1);
    EXPECT_EQ(design_matrix(chs, FeatureKind::raw).cols(), 9);
    EXPECT_EQ(design_matrix(chs, FeatureKind::quadratic).cols(), 45);
    EXPECT_EQ(feature_count(FeatureKind::quadratic, 25), 325u);
    std::vector<Challenge> mixed{Challenge::zeros(3), Challenge::zeros(5)};
    EXPECT_THROW(design_matrix(mixed, FeatureKind::raw), std::invalid_argument);
    EXPECT_EQ(parse_feature_kind(to_string(FeatureKind::quadratic)), FeatureKind::quadratic);
}

TEST(FitOls, RecoversKnownAffineMapFromMinimalSample) {
    const std::size_t n = 9;
    Rng rng(4);
    std::vector<Challenge> chs;
    for (std::uint64_t seed = 0;; ++seed) {
        chs = draw(3, n + 1, 100 + seed);
        Eigen::MatrixXd aug(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
        aug.col(0).setOnes();
        aug.rightCols(static_cast<Eigen::Index>(n)) = design_matrix(chs, FeatureKind::raw);
        if (Eigen::FullPivLU<Eigen::MatrixXd>(aug).rank() == static_cast<Eigen::Index>(n + 1)) break;
    }
    Eigen::MatrixXd truth(static_cast<Eigen::Index>(n + 1), 4);
    for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.normal();
    std::vector<Crp> train;
    for (const Challenge& ch : chs) {
        Crp c;
        c.challenge = ch;
        c.cropped = ResponseImage(2, 2);
        Eigen::RowVectorXd f(static_cast<Eigen::Index>(n + 1));
        f(0) = 1.0;
        f.tail(static_cast<Eigen::Index>(n)) = features_of(ch, FeatureKind::raw);
        const Eigen::RowVectorXd y = f * truth;
        for (int k = 0; k < 4; ++k) c.cropped.pixels[static_cast<std::size_t>(k)] = y(k);
        train.push_back(c);
    }
    const RegressionModel m = fit_ols(train, FeatureKind::raw);
    EXPECT_LT(max_abs(m.coefficients - truth), 1e-8);
}

TEST(FitOls, IdenticalTargetsGiveInterceptOnly) {
    std::vector<Crp> train;
    for (const Challenge& ch : draw(3, 30, 2)) {
        Crp c;
        c.challenge = ch;
        c.cropped = ResponseImage(2, 3, 0.75);
        train.push_back(c);
    }
    for (FeatureKind kind : {FeatureKind::raw, FeatureKind::quadratic}) {
        const RegressionModel m = fit_ols(train, kind);
        EXPECT_LT((m.coefficients.row(0).array() - 0.75).abs().maxCoeff(), 1e-12);
        EXPECT_LT(max_abs(m.coefficients.bottomRows(m.coefficients.rows() - 1)), 1e-12);
    }
}

TEST(FitOls, ResidualsOrthogonalToFeatures) {
    const TransmissionMatrix puf = build_puf(small_puf(5, 3));
    const auto train = simulate(puf, draw(5, 80, 9));
    const RegressionModel m = fit_ols(train, FeatureKind::raw);
    Eigen::MatrixXd x(80, 26);
    x.col(0).setOnes();
    std::vector<Challenge> chs;
    for (const Crp& c : train) chs.push_back(c.challenge);
    x.rightCols(25) = design_matrix(chs, FeatureKind::raw);
    const Eigen::MatrixXd y = target_matrix(train);
    const Eigen::MatrixXd resid = y - x * m.coefficients;
    const Eigen::MatrixXd inner = x.transpose() * resid;
    EXPECT_LT(max_abs(inner), 1e-6 * y.cwiseAbs().maxCoeff() * std::sqrt(80.0));
}

TEST(FitOls, QuadraticFeaturesFitSimulatorExactly) {
    const TransmissionMatrix puf = build_puf(small_puf(3, 12));
    const auto train = simulate(puf, draw(3, 100, 5));
    const RegressionModel m = fit_ols(train, FeatureKind::quadratic);
    const Eigen::MatrixXd y = target_matrix(train);
    const double energy = y.squaredNorm() / static_cast<double>(y.size());
    EXPECT_LT(m.training_residual.mse / energy, 1e-16);
}

TEST(FitOls, RejectsInconsistentTraining) {
    std::vector<Crp> train(2);
    train[0].challenge = Challenge::zeros(3);
    train[0].cropped = ResponseImage(2, 2);
    train[1].challenge = Challenge::zeros(5);
    train[1].cropped = ResponseImage(2, 2);
    EXPECT_THROW(fit_ols(train, FeatureKind::raw), std::invalid_argument);
    EXPECT_THROW(fit_ols(std::vector<Crp>{}, FeatureKind::raw), std::invalid_argument);
    train[1].challenge = Challenge::zeros(3);
    train[1].cropped = ResponseImage(3, 3);
    EXPECT_THROW(fit_ols(train, FeatureKind::raw), std::invalid_argument);
}

TEST(FitRidge, ZeroPenaltyMatchesOls) {
    const TransmissionMatrix puf = build_puf(small_puf(5, 8));
    const auto train = simulate(puf, draw(5, 60, 1));
    const auto test = draw(5, 20, 2);
    for (FeatureKind kind : {FeatureKind::raw, FeatureKind::quadratic}) {
        const Eigen::MatrixXd a = predict_matrix(fit_ols(train, kind), test);
        const Eigen::MatrixXd b = predict_matrix(fit_ridge(train, kind, 0.0), test);
        EXPECT_LT(max_abs(a - b), 1e-8) << to_string(kind);
    }
    EXPECT_THROW(fit_ridge(train, FeatureKind::raw, -1e-3), std::invalid_argument);
}

TEST(FitRidge, ShrinkageIsMonotone) {
    const TransmissionMatrix puf = build_puf(small_puf(5, 8));
    const auto train = simulate(puf, draw(5, 60, 1));
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : default_lambda_grid()) {
        const RegressionModel m = fit_ridge(train, FeatureKind::raw, lambda);
        const double norm = m.coefficients.bottomRows(25).norm();
        EXPECT_LE(norm, previous * (1 + 1e-12)) << lambda;
        previous = norm;
    }
    const RegressionModel huge = fit_ridge(train, FeatureKind::raw, 1e14);
    EXPECT_LT(huge.coefficients.bottomRows(25).norm(), 1e-6 * fit_ols(train, FeatureKind::raw).coefficients.bottomRows(25).norm());
    // intercept stays at the target mean, which the penalty does not touch
    const Eigen::RowVectorXd mean = target_matrix(train).colwise().mean();
    const Eigen::RowVectorXd xmean = [&] {
        std::vector<Challenge> chs;
        for (const Crp& c : train) chs.push_back(c.challenge);
        return Eigen::RowVectorXd(design_matrix(chs, FeatureKind::raw).colwise().mean());
    }();
    const Eigen::RowVectorXd implied = huge.coefficients.row(0) + xmean * huge.coefficients.bottomRows(25);
    EXPECT_LT((implied - mean).cwiseAbs().maxCoeff(), 1e-9 * mean.cwiseAbs().maxCoeff());
}

TEST(RidgePath, AgreesWithDirectNormalEquations) {
    Rng rng(6);
    Eigen::MatrixXd x(30, 8), y(30, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    const RidgePath path(x, y);
    const Eigen::RowVectorXd xm = x.colwise().mean(), ym = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - xm, yc = y.rowwise() - ym;
    for (double lambda : {0.0, 0.1, 3.0, 100.0}) {
        const Eigen::MatrixXd a = xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(8, 8);
        const Eigen::MatrixXd slopes = a.ldlt().solve(xc.transpose() * yc);
        const AffineFit fit = path.fit(lambda);
        EXPECT_LT(max_abs(fit.slopes - slopes), 1e-10);
        EXPECT_LT((fit.intercept - (ym - xm * slopes)).cwiseAbs().maxCoeff(), 1e-10);
        const Eigen::MatrixXd pred = (x * slopes).rowwise() + (ym - xm * slopes);
        EXPECT_LT(max_abs(path.predict(x, lambda) - pred), 1e-10);
    }
}

TEST(SelectLambda, SingletonGridAndDeterminism) {
    PufConfig c = small_puf(3, 2, 64, 40);
    const TransmissionMatrix puf = build_puf(c);
    const auto train = simulate(puf, draw(3, 80, 4));
    const std::vector<double> zero{0.0};
    EXPECT_EQ(select_lambda(train, FeatureKind::raw, zero, 1), 0.0);
    const auto grid = default_lambda_grid();
    ASSERT_EQ(grid.size(), 13u);
    EXPECT_DOUBLE_EQ(grid.front(), 1e-6);
    EXPECT_DOUBLE_EQ(grid.back(), 1e4);
    EXPECT_EQ(select_lambda(train, FeatureKind::raw, grid, 3), select_lambda(train, FeatureKind::raw, grid, 3));
    EXPECT_THROW(select_lambda(train, FeatureKind::raw, std::vector<double>{}, 1), std::invalid_argument);
}

TEST(SelectLambda, ExactRegimeBeatsHeavyPenalty) {
    PufConfig c = small_puf(3, 5, 64, 40);
    const TransmissionMatrix puf = build_puf(c);
    const auto train = simulate(puf, draw(3, 150, 1));
    const auto test = simulate(puf, draw(3, 30, 2));
    const double chosen = select_lambda(train, FeatureKind::quadratic, default_lambda_grid(), 7);
    const double fhd_chosen = mean_fhd(fit_ridge(train, FeatureKind::quadratic, chosen), test, GaborPreset::G1);
    const double fhd_heavy = mean_fhd(fit_ridge(train, FeatureKind::quadratic, 1e4), test, GaborPreset::G1);
    EXPECT_LE(fhd_chosen, fhd_heavy);
}

TEST(Predict, SingleSampleInterpolates) {
    const TransmissionMatrix puf = build_puf(small_puf(3, 9));
    const auto train = simulate(puf, draw(3, 1, 3));
    const RegressionModel m = fit_ols(train, FeatureKind::raw);
    const ResponseImage p = predict(m, train[0].challenge);
    for (std::size_t i = 0; i < p.pixels.size(); ++i)
        EXPECT_NEAR(p.pixels[i], train[0].cropped.pixels[i], 1e-12 * train[0].cropped.max_value());
}

TEST(Predict, ZeroChallengeWithZeroInterceptGivesZero) {
    RegressionModel m;
    m.grid_side = 3;
    m.output_rows = 2;
    m.output_cols = 2;
    m.coefficients = Eigen::MatrixXd::Ones(10, 4);
    m.coefficients.row(0).setZero();
    const ResponseImage p = predict(m, Challenge::zeros(3));
    for (double v : p.pixels) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(predict(m, Challenge::zeros(5)), std::invalid_argument);
}

TEST(Predict, NegativeIntensitiesAreClamped) {
    RegressionModel m;
    m.grid_side = 3;
    m.output_rows = 1;
    m.output_cols = 2;
    m.coefficients = Eigen::MatrixXd::Zero(10, 2);
    m.coefficients(0, 0) = -2.0;
    m.coefficients(0, 1) = 3.0;
    const ResponseImage p = predict(m, Challenge::ones(3));
    EXPECT_EQ(p.pixels, (std::vector<double>{0.0, 3.0}));
    EXPECT_EQ(predict_matrix(m, std::vector<Challenge>{Challenge::ones(3)})(0, 0), -2.0);
}

TEST(Predict, QuadraticModelGeneralizesOnSimulator) {
    const TransmissionMatrix puf = build_puf(small_puf(3, 31, 64, 48));
    const auto train = simulate(puf, draw(3, 120, 11));
    const auto test = simulate(puf, draw(3, 20, 12));
    const RegressionModel m = fit_ols(train, FeatureKind::quadratic);
    EXPECT_LT(mean_fhd(m, test, GaborPreset::G1), 0.01);
}

TEST(Predict, ExactRecoveryBothPresets) {
    const TransmissionMatrix puf = build_puf(small_puf(3, 41, 96, 64));
    const auto train = simulate(puf, draw(3, 80, 21));
    const auto test = simulate(puf, draw(3, 25, 22));
    const RegressionModel m = fit_ols(train, FeatureKind::quadratic);
    for (GaborPreset preset : kAllPresets) {
        const GaborKernel k = make_kernel(preset);
        for (const Crp& c : test) ASSERT_EQ(gabor_binarize(predict(m, c.challenge), k), gabor_binarize(c.cropped, k));
    }
}

TEST(SplitCoefficients, PreservesPredictions) {
    const TransmissionMatrix puf = build_puf(small_puf(5, 13));
    const auto train = simulate(puf, draw(5, 60, 3));
    const RegressionModel m = fit_ols(train, FeatureKind::raw);
    EXPECT_EQ(split_coefficients(m, 1).coefficients, m.coefficients);
    const auto probe = draw(5, 15, 4);
    const Eigen::MatrixXd base = predict_matrix(m, probe);
    for (std::size_t f : {2u, 3u}) {
        const RegressionModel s = split_coefficients(m, f);
        EXPECT_EQ(s.grid_side, 5 * f);
        std::vector<Challenge> split;
        for (const Challenge& ch : probe) split.push_back(split_blocks(ch, f));
        EXPECT_LT(max_abs(predict_matrix(s, split) - base), 1e-10 * max_abs(base));
        // slope sum per original block is preserved
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 5; ++c) {
                Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(m.coefficients.cols());
                for (std::size_t dr = 0; dr < f; ++dr)
                    for (std::size_t dc = 0; dc < f; ++dc)
                        sum += s.coefficients.row(static_cast<Eigen::Index>(1 + (r * f + dr) * 5 * f + c * f + dc));
                EXPECT_LT((sum - m.coefficients.row(static_cast<Eigen::Index>(1 + r * 5 + c))).cwiseAbs().maxCoeff(),
                          1e-12 * max_abs(m.coefficients));
            }
    }
    EXPECT_THROW(split_coefficients(fit_ols(train, FeatureKind::quadratic), 2), std::invalid_argument);
    EXPECT_THROW(split_coefficients(m, 0), std::invalid_argument);
}

TEST(ModelIo, RoundTripIsExact) {
    TempDir dir("model_io");
    const TransmissionMatrix puf = build_puf(small_puf(3, 13));
    const auto train = simulate(puf, draw(3, 20, 3));
    const RegressionModel m = fit_ridge(train, FeatureKind::quadratic, 0.125);
    save_model(m, dir / "m");
    const RegressionModel back = load_model(dir / "m");
    EXPECT_EQ(back.coefficients, m.coefficients);
    EXPECT_EQ(back.features, m.features);
    EXPECT_EQ(back.lambda, m.lambda);
    EXPECT_EQ(back.grid_side, m.grid_side);
    EXPECT_EQ(back.output_rows, m.output_rows);
    EXPECT_EQ(std::filesystem::file_size(dir / "m.f64"), static_cast<std::uintmax_t>(m.coefficients.size() * 8));
    EXPECT_THROW(load_model(dir / "missing"), std::exception);
}
