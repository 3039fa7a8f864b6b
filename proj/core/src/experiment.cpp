#include "puf_forge/experiment.hpp"

#include "puf_forge/parallel.hpp"
#include "puf_forge/report.hpp"
#include "puf_forge/rng.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

// ---- dataset evaluation ----------------------------------------------------

EvaluationReport evaluate_dataset(const Dataset& dataset, std::size_t sample_size, std::uint64_t seed) {
    if (dataset.crps.size() < 2) throw std::invalid_argument("evaluate_dataset: need at least 2 CRPs");
    EvaluationReport report;
    report.sample_size = sample_size;
    report.seed = seed;
    report.sampled = sample_indices(dataset.crps.size(), sample_size, seed);
    if (report.sampled.size() < 2) throw std::invalid_argument("evaluate_dataset: sample size must be >= 2");

    const std::size_t m = report.sampled.size();
    std::vector<BitResponse> g1(m), g2(m);
    report.entropies.resize(m);
    parallel_for(m, [&](std::size_t i) {
        const Crp& crp = dataset.crps[report.sampled[i]];
        g1[i] = crp_bits(crp, GaborPreset::G1);
        g2[i] = crp_bits(crp, GaborPreset::G2);
        report.entropies[i] = shannon_entropy(crp.cropped, 8);
    });

    std::vector<double> v1, v2;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            PairRow row{report.sampled[a], report.sampled[b], fhd(g1[a], g1[b]), fhd(g2[a], g2[b])};
            v1.push_back(row.fhd_g1);
            v2.push_back(row.fhd_g2);
            report.pairs.push_back(row);
        }
    report.fhd_g1 = boxplot_stats(v1);
    report.fhd_g2 = boxplot_stats(v2);
    report.entropy = boxplot_stats(report.entropies);
    return report;
}

// ---- attacks -------------------------------------------------------------------

std::string_view to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::lr: return "lr";
        case AttackKind::ridge: return "ridge";
        case AttackKind::qlr: return "qlr";
        case AttackKind::qrr: return "qrr";
        case AttackKind::generator: return "generator";
    }
    return "?";
}

AttackKind parse_attack(std::string_view text) {
    for (AttackKind k : {AttackKind::lr, AttackKind::ridge, AttackKind::qlr, AttackKind::qrr, AttackKind::generator})
        if (text == to_string(k)) return k;
    throw std::invalid_argument("unknown attack model '" + std::string(text) + "'");
}

FeatureKind attack_features(AttackKind kind) {
    return kind == AttackKind::qlr || kind == AttackKind::qrr ? FeatureKind::quadratic : FeatureKind::raw;
}

void to_json(nlohmann::json& j, const AttackReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const CrpScore& s : r.rows)
        rows.push_back({{"index", s.index},
                        {"fhd_g1", s.fhd_g1},
                        {"fhd_g2", s.fhd_g2},
                        {"pearson", s.pearson ? nlohmann::json(*s.pearson) : nlohmann::json(nullptr)},
                        {"ssim", s.ssim}});
    j = nlohmann::json{{"model_kind", std::string(to_string(r.kind))},
                       {"test_count", r.rows.size()},
                       {"fhd_g1", r.fhd_g1},
                       {"fhd_g2", r.fhd_g2},
                       {"pearson", r.pearson},
                       {"ssim", r.ssim},
                       {"model", r.model},
                       {"rows", rows}};
    if (r.threshold) {
        j["threshold"] = {{"value", *r.threshold},
                          {"preset", std::string(to_string(r.threshold_preset))},
                          {"fraction_below", r.fraction_below_threshold.value_or(0.0)}};
    }
}

void from_json(const nlohmann::json& j, AttackReport& r) {
    r.kind = parse_attack(j.at("model_kind").get<std::string>());
    r.model = j.value("model", nlohmann::json::object());
    r.rows.clear();
    for (const auto& row : j.at("rows")) {
        CrpScore s;
        s.index = row.at("index").get<std::size_t>();
        s.fhd_g1 = row.at("fhd_g1").get<double>();
        s.fhd_g2 = row.at("fhd_g2").get<double>();
        if (!row.at("pearson").is_null()) s.pearson = row.at("pearson").get<double>();
        s.ssim = row.at("ssim").get<double>();
        r.rows.push_back(s);
    }
    r.threshold.reset();
    if (j.contains("threshold")) {
        r.threshold = j.at("threshold").at("value").get<double>();
        r.threshold_preset = parse_preset(j.at("threshold").at("preset").get<std::string>());
    }
    summarize(r);
}

void summarize(AttackReport& report) {
    if (report.rows.empty()) throw std::invalid_argument("attack report has no rows");
    std::vector<double> g1, g2, pc, ss;
    for (const CrpScore& s : report.rows) {
        g1.push_back(s.fhd_g1);
        g2.push_back(s.fhd_g2);
        if (s.pearson) pc.push_back(*s.pearson);
        ss.push_back(s.ssim);
    }
    report.fhd_g1 = boxplot_stats(g1);
    report.fhd_g2 = boxplot_stats(g2);
    report.pearson = pc.empty() ? BoxplotSummary{} : boxplot_stats(pc);
    report.ssim = boxplot_stats(ss);
    report.fraction_below_threshold.reset();
    if (report.threshold) {
        const auto& values = report.threshold_preset == GaborPreset::G1 ? g1 : g2;
        const auto below = std::count_if(values.begin(), values.end(), [&](double v) { return v < *report.threshold; });
        report.fraction_below_threshold = static_cast<double>(below) / static_cast<double>(values.size());
    }
}

ResponseImage to_crop_resolution(const ResponseImage& prediction, std::size_t rows, std::size_t cols) {
    if (prediction.rows == rows && prediction.cols == cols) return prediction;
    return upsample_nearest(prediction, rows, cols);
}

AttackReport score_predictions(std::span<const Crp> test, std::span<const std::size_t> indices,
                               std::span<const ResponseImage> predictions, AttackKind kind) {
    if (test.size() != predictions.size() || test.size() != indices.size())
        throw std::invalid_argument("score_predictions: mismatched test and prediction counts");
    if (test.empty()) throw std::invalid_argument("score_predictions: empty test set");
    const GaborKernel k1 = make_kernel(GaborPreset::G1);
    const GaborKernel k2 = make_kernel(GaborPreset::G2);
    AttackReport report;
    report.kind = kind;
    report.rows.resize(test.size());
    parallel_for(test.size(), [&](std::size_t i) {
        const Crp& crp = test[i];
        const ResponseImage& pred = predictions[i];
        if (pred.rows != crp.cropped.rows || pred.cols != crp.cropped.cols)
            throw std::invalid_argument("prediction " + std::to_string(i) + " does not match the crop size");
        CrpScore& s = report.rows[i];
        s.index = indices[i];
        s.fhd_g1 = fhd(gabor_binarize(pred, k1), crp_bits(crp, GaborPreset::G1));
        s.fhd_g2 = fhd(gabor_binarize(pred, k2), crp_bits(crp, GaborPreset::G2));
        try {
            s.pearson = pearson(pred, crp.cropped);
        } catch (const std::invalid_argument&) {
            s.pearson.reset();
        }
        s.ssim = ssim(unit_max(pred), unit_max(crp.cropped));
    });
    summarize(report);
    return report;
}

namespace {

nlohmann::json regression_metadata(const RegressionModel& m, AttackKind kind, bool selected) {
    return {{"kind", std::string(to_string(kind))},
            {"features", std::string(to_string(m.features))},
            {"feature_count", m.feature_count()},
            {"lambda", m.lambda},
            {"lambda_selected", selected},
            {"grid_side", m.grid_side},
            {"output_rows", m.output_rows},
            {"output_cols", m.output_cols},
            {"training_mse", m.training_residual.mse},
            {"training_max_abs_residual", m.training_residual.max_abs}};
}

}  // namespace

AttackOutcome run_attack(const Dataset& dataset, AttackKind kind, const AttackOptions& options) {
    const std::vector<Crp> train_set = dataset.train();
    const std::vector<Crp> test = dataset.test();
    if (train_set.empty()) throw std::invalid_argument("dataset has no training CRPs");
    if (test.empty()) throw std::invalid_argument("dataset has no test CRPs");
    const std::size_t rows = test.front().cropped.rows;
    const std::size_t cols = test.front().cropped.cols;

    std::vector<ResponseImage> predictions;
    predictions.reserve(test.size());
    AttackOutcome outcome{AttackReport{}, RegressionModel{}, {}};
    nlohmann::json metadata;

    if (kind == AttackKind::generator) {
        const GeneratorSettings& g = options.generator;
        GeneratorModel model = build_generator(train_set.front().challenge.size(), g.hidden_widths, g.resolution, options.seed);
        const TrainOptions& training = g.training;
        TrainResult trained = train(std::move(model), std::span<const Crp>(train_set), training);
        for (const Crp& c : test)
            predictions.push_back(to_crop_resolution(predict_image(trained.model, c.challenge), rows, cols));
        std::vector<std::size_t> widths;
        for (const DenseLayer& l : trained.model.layers) widths.push_back(static_cast<std::size_t>(l.weights.rows()));
        metadata = {{"kind", "generator"},
                    {"input_width", trained.model.input_width},
                    {"layer_widths", widths},
                    {"resolution", trained.model.resolution},
                    {"parameters", trained.model.parameter_count()},
                    {"epochs", training.epochs},
                    {"batch_size", training.batch_size},
                    {"learning_rate", training.adam.learning_rate},
                    {"beta1", training.adam.beta1},
                    {"beta2", training.adam.beta2},
                    {"epsilon", training.adam.epsilon},
                    {"seed", trained.model.seed},
                    {"training_seed", training.seed},
                    {"final_training_loss", trained.loss_curve.empty() ? 0.0 : trained.loss_curve.back()}};
        outcome.loss_curve = std::move(trained.loss_curve);
        outcome.model = std::move(trained.model);
    } else {
        const FeatureKind features = attack_features(kind);
        RegressionModel model;
        bool selected = false;
        if (kind == AttackKind::lr || kind == AttackKind::qlr) {
            model = fit_ols(train_set, features);
        } else {
            double lambda = 0.0;
            if (options.lambda) {
                lambda = *options.lambda;
            } else {
                lambda = select_lambda(train_set, features, options.lambda_grid, options.seed);
                selected = true;
            }
            model = fit_ridge(train_set, features, lambda);
        }
        std::vector<Challenge> challenges;
        for (const Crp& c : test) challenges.push_back(c.challenge);
        const Eigen::MatrixXd raw = predict_matrix(model, challenges);
        for (Eigen::Index i = 0; i < raw.rows(); ++i) {
            ResponseImage img(rows, cols);
            Eigen::Map<Eigen::RowVectorXd>(img.pixels.data(), raw.cols()) = raw.row(i);
            clamp_nonnegative(img);
            predictions.push_back(std::move(img));
        }
        metadata = regression_metadata(model, kind, selected);
        outcome.model = std::move(model);
    }

    outcome.report = score_predictions(test, dataset.test_indices, predictions, kind);
    outcome.report.model = std::move(metadata);
    if (options.threshold) {
        outcome.report.threshold = options.threshold;
        outcome.report.threshold_preset = options.threshold_preset;
        summarize(outcome.report);
    }
    return outcome;
}

// ---- experiment matrix ---------------------------------------------------------

void to_json(nlohmann::json& j, const MatrixConfig& c) {
    std::vector<std::string> schemes, models;
    for (SchemeType s : c.schemes) schemes.emplace_back(to_string(s));
    for (AttackKind m : c.models) models.emplace_back(to_string(m));
    j = nlohmann::json{{"sizes", c.sizes}, {"schemes", schemes}, {"models", models},
                       {"puf", c.puf},     {"count", c.count},     {"seed", c.seed}};
}

MatrixConfig matrix_config_from_json(const nlohmann::json& j) {
    MatrixConfig c;
    if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    if (j.contains("models")) {
        c.models.clear();
        for (const auto& m : j.at("models")) c.models.push_back(parse_attack(m.get<std::string>()));
    }
    if (j.contains("puf")) c.puf = j.at("puf").get<PufConfig>();
    c.count = j.value("count", c.count);
    c.seed = j.value("seed", c.seed);
    if (j.contains("lambda")) c.attack.lambda = j.at("lambda").get<double>();
    if (j.contains("attack_seed")) c.attack.seed = j.at("attack_seed").get<std::uint64_t>();
    if (j.contains("epochs")) c.attack.generator.training.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("hidden")) c.attack.generator.hidden_widths = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("resolution")) c.attack.generator.resolution = j.at("resolution").get<std::size_t>();
    if (c.sizes.empty() || c.schemes.empty() || c.models.empty())
        throw std::invalid_argument("matrix config needs nonempty sizes, schemes and models");
    return c;
}

std::string cell_name(std::size_t grid_side, SchemeType scheme) {
    std::string s = std::to_string(grid_side);
    if (s.size() < 2) s.insert(0, "0");
    return "l" + s + "_" + std::string(to_string(scheme));
}

Dataset matrix_cell_dataset(const MatrixConfig& config, std::size_t grid_side, SchemeType scheme) {
    PufConfig puf = config.puf;
    puf.grid_side = grid_side;
    Dataset d = generate_dataset(dataset_spec_from_seed(puf, scheme, config.count, config.seed));
    quantize_to_storage(d);
    return d;
}

MatrixResult run_matrix(const MatrixConfig& config, const std::optional<std::filesystem::path>& out_dir) {
    struct Cell { std::size_t grid_side; SchemeType scheme; };
    std::vector<Cell> cells;
    for (std::size_t l : config.sizes)
        for (SchemeType s : config.schemes) cells.push_back({l, s});

    const std::size_t per_cell = config.models.size();
    MatrixResult result;
    result.rows.resize(cells.size() * per_cell);
    result.reports.resize(cells.size() * per_cell);

    parallel_for(cells.size(), [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        std::optional<Dataset> dataset;
        std::string dataset_error;
        try {
            dataset = matrix_cell_dataset(config, cell.grid_side, cell.scheme);
        } catch (const std::exception& e) {
            dataset_error = std::string("dataset: ") + e.what();
        }
        for (std::size_t mi = 0; mi < per_cell; ++mi) {
            MatrixRow& row = result.rows[ci * per_cell + mi];
            row.grid_side = cell.grid_side;
            row.scheme = cell.scheme;
            row.model = config.models[mi];
            if (!dataset) {
                row.error = dataset_error;
                continue;
            }
            try {
                AttackOutcome outcome = run_attack(*dataset, row.model, config.attack);
                row.ok = true;
                row.mean_fhd_g1 = outcome.report.fhd_g1.mean;
                row.mean_fhd_g2 = outcome.report.fhd_g2.mean;
                if (out_dir)
                    write_attack_report(outcome.report,
                                        *out_dir / cell_name(cell.grid_side, cell.scheme) / std::string(to_string(row.model)));
                result.reports[ci * per_cell + mi] = std::move(outcome.report);
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    });

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        write_text(*out_dir / "matrix.csv", matrix_csv(result.rows));
        write_json(*out_dir / "matrix_config.json", config);
    }
    return result;
}

// ---- scale experiment ------------------------------------------------------------

std::vector<ScaleRow> scale_experiment(const Dataset& small, const Dataset& large,
                                       std::span<const AttackKind> models, const AttackOptions& options) {
    if (!(small.manifest.puf == large.manifest.puf))
        throw std::invalid_argument("scale experiment: datasets come from different PUFs (seed or geometry mismatch)");
    if (small.manifest.scheme != large.manifest.scheme)
        throw std::invalid_argument("scale experiment: datasets use different challenge schemes");
    std::vector<ScaleRow> rows;
    for (AttackKind kind : models) {
        ScaleRow row;
        row.model = kind;
        row.train_small = small.train_indices.size();
        row.train_large = large.train_indices.size();
        row.fhd_small = run_attack(small, kind, options).report.fhd_g1.mean;
        row.fhd_large = run_attack(large, kind, options).report.fhd_g1.mean;
        row.improvement_percent = row.fhd_small > 0.0 ? 100.0 * (row.fhd_small - row.fhd_large) / row.fhd_small : 0.0;
        rows.push_back(row);
    }
    return rows;
}

// ---- like/unlike threshold ---------------------------------------------------------

ThresholdAnalysis like_unlike_threshold(const TransmissionMatrix& puf, const Dataset& dataset, GaborPreset preset,
                                        std::size_t pairs, std::uint64_t seed) {
    if (dataset.crps.size() < 2) throw std::invalid_argument("threshold analysis needs at least 2 CRPs");
    if (pairs == 0) throw std::invalid_argument("threshold analysis needs at least 1 pair");
    const GaborKernel kernel = make_kernel(preset);
    const std::size_t window = dataset.manifest.response_rows;
    auto readout = [&](const Challenge& ch, std::uint64_t stream) {
        return gabor_binarize(respond_cropped(puf, ch, window, true, stream), kernel);
    };
    ThresholdAnalysis out;
    out.preset = preset;
    out.like.resize(pairs);
    out.unlike.resize(pairs);
    Rng rng(seed, 0x5448524553ULL);
    std::vector<std::pair<std::size_t, std::size_t>> picks(pairs);
    for (auto& [a, b] : picks) {
        a = static_cast<std::size_t>(rng.below(dataset.crps.size()));
        do b = static_cast<std::size_t>(rng.below(dataset.crps.size()));
        while (b == a);
    }
    parallel_for(pairs, [&](std::size_t k) {
        const auto [a, b] = picks[k];
        const Challenge& ca = dataset.crps[a].challenge;
        const Challenge& cb = dataset.crps[b].challenge;
        const std::uint64_t base = derive_seed(seed, k) & ~std::uint64_t{3};
        const BitResponse first = readout(ca, base);
        out.like[k] = fhd(first, readout(ca, base + 1));
        out.unlike[k] = fhd(first, readout(cb, base + 2));
    });
    out.threshold = crossover_threshold(out.like, out.unlike);
    out.errors = threshold_errors(out.like, out.unlike, out.threshold);
    return out;
}

}  // namespace puf_forge
