#include "puf_forge_cli/cli.hpp"

#include "puf_forge/dataset.hpp"
#include "puf_forge/experiment.hpp"
#include "puf_forge/external_import.hpp"
#include "puf_forge/report.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace puf_forge::cli {
namespace {

namespace fs = std::filesystem;

struct PufFlags {
    std::optional<std::size_t> grid_side;
    std::optional<std::size_t> image_side;
    std::optional<std::size_t> crop_side;
    std::optional<double> smoothing;
    std::optional<int> scale_factor;
    std::optional<double> noise;

    void attach(CLI::App* app) {
        app->add_option("--l", grid_side, "blocks per row (odd, >= 3)");
        app->add_option("--image-side", image_side, "full response side in pixels");
        app->add_option("--crop-side", crop_side, "centered crop window side");
        app->add_option("--smoothing", smoothing, "speckle smoothing sigma in pixels");
        app->add_option("--scale-factor", scale_factor, "1 or 2")->check(CLI::IsMember({1, 2}));
    }

    void apply(PufConfig& c) const {
        if (grid_side) c.grid_side = *grid_side;
        if (image_side) c.image_side = *image_side;
        if (crop_side) c.crop_side = *crop_side;
        if (smoothing) c.speckle_smoothing = *smoothing;
        if (scale_factor) c.scale_factor = *scale_factor;
        if (noise) c.noise_std = *noise;
    }
};

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

PufConfig read_puf_file(const fs::path& path) {
    const nlohmann::json j = read_json(path);
    return (j.contains("puf") ? j.at("puf") : j).get<PufConfig>();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::vector<AttackKind> parse_models(const std::vector<std::string>& names) {
    std::vector<AttackKind> out;
    for (const auto& n : names) out.push_back(parse_attack(n));
    return out;
}

// ---- subcommands -------------------------------------------------------------

struct GenPuf {
    PufFlags puf;
    std::uint64_t seed = 0;
    fs::path out;

    void attach(CLI::App* app) {
        puf.attach(app);
        app->add_option("--seed", seed, "PUF seed");
        app->add_option("--noise", puf.noise, "multiplicative noise std used for noisy readouts");
        app->add_option("--out", out, "output JSON file")->required();
    }

    int run(std::ostream& os) const {
        PufConfig c;
        puf.apply(c);
        c.seed = seed;
        c.validate();
        nlohmann::json j{{"puf", c}, {"envelope_sigma", envelope_sigma(c)}, {"blocks", c.blocks()}};
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_json(out, j);
        os << "puf " << c.grid_side << "x" << c.grid_side << " seed " << c.seed << " -> " << out.string() << "\n";
        return kExitOk;
    }
};

struct GenDataset {
    PufFlags puf;
    std::optional<fs::path> puf_file;
    std::string scheme = "A";
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    std::optional<std::size_t> train;
    bool full = false;
    fs::path out;

    void attach(CLI::App* app) {
        puf.attach(app);
        app->add_option("--puf", puf_file, "PUF config from gen-puf; its seed is kept");
        app->add_option("--scheme", scheme, "challenge scheme")->check(CLI::IsMember({"A", "B", "C", "D"}));
        app->add_option("--count", count, "number of CRPs");
        app->add_option("--seed", seed, "dataset seed (PUF seed too unless --puf is given)");
        app->add_option("--train", train, "training CRPs (default 90%)");
        app->add_flag("--full", full, "also store full-resolution responses");
        app->add_option("--noise", puf.noise, "record noisy readouts with this multiplicative std");
        app->add_option("--out", out, "dataset directory")->required();
    }

    int run(std::ostream& os) const {
        PufConfig c;
        if (puf_file) c = read_puf_file(*puf_file);
        puf.apply(c);
        DatasetSpec spec = dataset_spec_from_seed(c, parse_scheme(scheme), count, seed);
        if (puf_file) spec.puf.seed = c.seed;
        spec.train_count = train;
        spec.full_responses = full;
        spec.add_noise = puf.noise.has_value() && *puf.noise > 0.0;
        Dataset d = generate_dataset(spec);
        quantize_to_storage(d);
        save_dataset(d, out);
        os << "dataset " << d.crps.size() << " CRPs (" << d.train_indices.size() << " train / "
           << d.test_indices.size() << " test) -> " << out.string() << "\n";
        return kExitOk;
    }
};

struct EvalDataset {
    fs::path dataset;
    fs::path out;
    std::size_t sample = 300;
    std::uint64_t seed = 0;

    void attach(CLI::App* app) {
        app->add_option("--dataset", dataset, "dataset directory")->required();
        app->add_option("--out", out, "report directory")->required();
        app->add_option("--sample", sample, "responses sampled for pairwise FHD");
        app->add_option("--seed", seed, "sampling seed");
    }

    int run(std::ostream& os) const {
        const Dataset d = load_dataset(dataset);
        const EvaluationReport r = evaluate_dataset(d, sample, seed);
        write_evaluation_report(r, out);
        os << "pairs " << r.pairs.size() << "  mean FHD G1 " << fixed(r.fhd_g1.mean) << "  G2 "
           << fixed(r.fhd_g2.mean) << "  entropy " << fixed(r.entropy.mean, 3) << "\n";
        return kExitOk;
    }
};

struct Attack {
    fs::path dataset;
    std::string model = "lr";
    fs::path out;
    std::uint64_t seed = 0;
    std::optional<double> lambda;
    std::optional<double> threshold;
    std::string threshold_preset = "G1";
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch;
    std::optional<std::vector<std::size_t>> hidden;
    std::optional<std::size_t> resolution;
    std::optional<double> learning_rate;

    void attach(CLI::App* app) {
        app->add_option("--dataset", dataset, "dataset directory")->required();
        app->add_option("--model", model, "attack model")
            ->check(CLI::IsMember({"lr", "ridge", "qlr", "qrr", "generator"}));
        app->add_option("--out", out, "attack directory")->required();
        app->add_option("--seed", seed, "seed for lambda selection and generator init");
        app->add_option("--lambda", lambda, "fixed ridge penalty, skips selection");
        app->add_option("--threshold", threshold, "FHD threshold for the verdict");
        app->add_option("--threshold-preset", threshold_preset, "kernel the threshold applies to")
            ->check(CLI::IsMember({"G1", "G2"}));
        app->add_option("--epochs", epochs, "generator epochs");
        app->add_option("--batch", batch, "generator batch size");
        app->add_option("--hidden", hidden, "generator hidden widths")->delimiter(',');
        app->add_option("--resolution", resolution, "generator output side");
        app->add_option("--learning-rate", learning_rate, "ADAM step size");
    }

    AttackOptions options() const {
        AttackOptions o;
        o.seed = seed;
        o.lambda = lambda;
        o.threshold = threshold;
        o.threshold_preset = parse_preset(threshold_preset);
        if (epochs) o.generator.training.epochs = *epochs;
        if (batch) o.generator.training.batch_size = *batch;
        if (hidden) o.generator.hidden_widths = *hidden;
        if (resolution) o.generator.resolution = *resolution;
        if (learning_rate) o.generator.training.adam.learning_rate = *learning_rate;
        o.generator.training.seed = seed;
        return o;
    }

    int run(std::ostream& os) const {
        const Dataset d = load_dataset(dataset);
        const AttackOutcome outcome = run_attack(d, parse_attack(model), options());
        fs::create_directories(out);
        write_json(out / "attack.json", outcome.report);
        if (const auto* m = std::get_if<RegressionModel>(&outcome.model)) save_model(*m, out / "model");
        if (const auto* g = std::get_if<GeneratorModel>(&outcome.model)) {
            save_generator(*g, out / "model");
            write_loss_curve(outcome.loss_curve, out / "loss_curve.csv");
        }
        const AttackReport& r = outcome.report;
        os << model << ": " << r.rows.size() << " test CRPs  mean FHD G1 " << fixed(r.fhd_g1.mean) << "  G2 "
           << fixed(r.fhd_g2.mean) << "  SSIM " << fixed(r.ssim.mean);
        if (r.fraction_below_threshold) os << "  below threshold " << fixed(*r.fraction_below_threshold, 3);
        os << "\n";
        return kExitOk;
    }
};

struct Report {
    fs::path attack;
    std::optional<fs::path> out;

    void attach(CLI::App* app) {
        app->add_option("--attack", attack, "attack directory")->required();
        app->add_option("--out", out, "report directory (default: the attack directory)");
    }

    int run(std::ostream& os) const {
        const AttackReport r = read_json(attack / "attack.json").get<AttackReport>();
        const fs::path dir = out.value_or(attack);
        write_attack_report(r, dir);
        os << "report -> " << dir.string() << "\n";
        return kExitOk;
    }
};

struct Import {
    fs::path in;
    fs::path out;
    std::optional<std::size_t> crop;
    std::optional<std::size_t> train;
    std::optional<std::uint64_t> split_seed;
    bool keep_full = false;

    void attach(CLI::App* app) {
        app->add_option("--in", in, "external CRP directory")->required();
        app->add_option("--out", out, "dataset directory")->required();
        app->add_option("--crop", crop, "crop window side");
        app->add_option("--train", train, "training CRPs");
        app->add_option("--split-seed", split_seed, "split seed");
        app->add_flag("--keep-full", keep_full, "store the uncropped images too");
    }

    int run(std::ostream& os) const {
        ImportFormat f = read_import_format(in);
        if (crop) f.crop_side = crop;
        if (train) f.train_count = train;
        if (split_seed) f.split_seed = *split_seed;
        if (keep_full) f.keep_full = true;
        Dataset d = import_external(in, f);
        quantize_to_storage(d);
        save_dataset(d, out);
        os << "imported " << d.crps.size() << " CRPs (" << d.train_indices.size() << " train / "
           << d.test_indices.size() << " test) -> " << out.string() << "\n";
        return kExitOk;
    }
};

struct Threshold {
    fs::path dataset;
    std::optional<fs::path> out;
    std::size_t pairs = 200;
    std::uint64_t seed = 0;
    std::string preset = "G1";
    std::optional<double> noise;

    void attach(CLI::App* app) {
        app->add_option("--dataset", dataset, "simulated dataset directory")->required();
        app->add_option("--out", out, "report directory");
        app->add_option("--pairs", pairs, "like and unlike pairs each");
        app->add_option("--seed", seed, "pair sampling and noise seed");
        app->add_option("--preset", preset, "Gabor preset")->check(CLI::IsMember({"G1", "G2"}));
        app->add_option("--noise", noise, "override the PUF noise std");
    }

    int run(std::ostream& os) const {
        const Dataset d = load_dataset(dataset);
        if (d.manifest.source != "simulated")
            throw std::invalid_argument("threshold needs a simulated dataset (the PUF must be re-evaluated)");
        PufConfig c = d.manifest.puf;
        if (noise) c.noise_std = *noise;
        if (c.noise_std <= 0.0) throw std::invalid_argument("threshold needs --noise > 0 or a noisy PUF config");
        const TransmissionMatrix puf = build_puf(c);
        const ThresholdAnalysis a = like_unlike_threshold(puf, d, parse_preset(preset), pairs, seed);
        if (out) {
            fs::create_directories(*out);
            std::ostringstream csv;
            csv << "kind,fhd\n";
            for (double v : a.like) csv << "like," << format_double(v) << "\n";
            for (double v : a.unlike) csv << "unlike," << format_double(v) << "\n";
            write_text(*out / "like_unlike.csv", csv.str());
            write_json(*out / "threshold.json",
                       {{"preset", std::string(to_string(a.preset))},
                        {"pairs", pairs},
                        {"noise_std", c.noise_std},
                        {"threshold", a.threshold},
                        {"errors", a.errors},
                        {"like", boxplot_stats(a.like)},
                        {"unlike", boxplot_stats(a.unlike)}});
        }
        os << "threshold " << format_double(a.threshold) << "  misclassified " << a.errors << " of "
           << a.like.size() + a.unlike.size() << "\n";
        return kExitOk;
    }
};

struct Matrix {
    std::optional<fs::path> config;
    std::optional<std::vector<std::size_t>> sizes;
    std::optional<std::vector<std::string>> schemes;
    std::optional<std::vector<std::string>> models;
    std::optional<std::size_t> count;
    std::optional<std::uint64_t> seed;
    fs::path out;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "matrix config JSON");
        app->add_option("--sizes", sizes, "grid sides")->delimiter(',');
        app->add_option("--schemes", schemes, "challenge schemes")->delimiter(',');
        app->add_option("--models", models, "attack models")->delimiter(',');
        app->add_option("--count", count, "CRPs per cell");
        app->add_option("--seed", seed, "dataset seed shared by all cells");
        app->add_option("--out", out, "output directory")->required();
    }

    int run(std::ostream& os) const {
        nlohmann::json j = config ? read_json(*config) : nlohmann::json::object();
        if (sizes) j["sizes"] = *sizes;
        if (schemes) j["schemes"] = *schemes;
        if (models) j["models"] = *models;
        if (count) j["count"] = *count;
        if (seed) j["seed"] = *seed;
        const MatrixConfig c = matrix_config_from_json(j);
        const MatrixResult r = run_matrix(c, out);
        std::size_t failed = 0;
        for (const MatrixRow& row : r.rows) {
            os << cell_name(row.grid_side, row.scheme) << " " << to_string(row.model) << "  ";
            if (row.ok) {
                os << "FHD G1 " << fixed(row.mean_fhd_g1) << "  G2 " << fixed(row.mean_fhd_g2) << "\n";
            } else {
                ++failed;
                os << "failed: " << row.error << "\n";
            }
        }
        os << r.rows.size() - failed << " of " << r.rows.size() << " runs succeeded -> " << out.string() << "\n";
        return failed == 0 ? kExitOk : kExitFailure;
    }
};

struct Scale {
    fs::path small;
    fs::path large;
    std::vector<std::string> models{"lr", "qlr"};
    std::optional<fs::path> out;
    std::uint64_t seed = 0;
    std::optional<double> lambda;

    void attach(CLI::App* app) {
        app->add_option("--small", small, "smaller dataset directory")->required();
        app->add_option("--large", large, "larger dataset directory")->required();
        app->add_option("--models", models, "attack models")->delimiter(',');
        app->add_option("--out", out, "report directory");
        app->add_option("--seed", seed, "attack seed");
        app->add_option("--lambda", lambda, "fixed ridge penalty");
    }

    int run(std::ostream& os) const {
        AttackOptions o;
        o.seed = seed;
        o.lambda = lambda;
        const std::vector<AttackKind> kinds = parse_models(models);
        const std::vector<ScaleRow> rows = scale_experiment(load_dataset(small), load_dataset(large), kinds, o);
        if (out) {
            fs::create_directories(*out);
            write_text(*out / "scale.csv", scale_csv(rows));
            write_json(*out / "scale.json", scale_json(rows));
        }
        for (const ScaleRow& r : rows)
            os << to_string(r.model) << "  " << r.train_small << ": " << fixed(r.fhd_small) << "  " << r.train_large
               << ": " << fixed(r.fhd_large) << "  improvement " << fixed(r.improvement_percent, 1) << "%\n";
        return kExitOk;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optical PUF simulation, CRP datasets and modeling attacks", "puf-forge"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GenPuf gen_puf;
    GenDataset gen_dataset;
    EvalDataset eval_dataset;
    Attack attack;
    Report report;
    Import import;
    Threshold threshold;
    Matrix matrix;
    Scale scale;

    std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
    auto add = [&](auto& cmd, const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        cmd.attach(sub);
        commands.emplace_back(sub, [&cmd, &out] { return cmd.run(out); });
    };
    add(gen_puf, "gen-puf", "write a PUF configuration");
    add(gen_dataset, "gen-dataset", "simulate a CRP dataset");
    add(eval_dataset, "eval-dataset", "pairwise FHD and entropy of a dataset");
    add(attack, "attack", "train one attack model and score the test split");
    add(report, "report", "CSV, JSON and SVG from an attack directory");
    add(import, "import", "convert external CRPs into a dataset");
    add(threshold, "threshold", "like/unlike FHD crossover threshold");
    add(matrix, "matrix", "run the size x scheme x model grid");
    add(scale, "scale", "compare attacks trained on a small and a large dataset");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        for (auto& [sub, fn] : commands)
            if (sub->parsed()) return fn();
    } catch (const ImportError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitInvalid;
}

}  // namespace puf_forge::cli
