#include "puf_forge/dataset.hpp"
#include "puf_forge/external_import.hpp"

#include "puf_forge_cli/cli.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sstream>

using namespace puf_forge;
using puf_forge::testing::slurp;
using puf_forge::testing::TempDir;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> small_dataset_args(const std::filesystem::path& out, std::string count = "60") {
    return {"gen-dataset", "--l", "3", "--image-side", "96", "--crop-side", "64", "--count", count, "--seed", "5",
            "--out", out.string()};
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
    const CliRun r = cli_run({"gen-puf", "--bogus", "1", "--out", "x.json"});
    EXPECT_EQ(r.code, cli::kExitInvalid);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(cli_run({}).code, cli::kExitInvalid); }

TEST(Cli, InvalidConfigIsUsageError) {
    TempDir dir("cli_invalid");
    const CliRun r = cli_run({"gen-puf", "--l", "4", "--out", (dir / "p.json").string()});
    EXPECT_EQ(r.code, cli::kExitInvalid);
}

TEST(Cli, MissingDatasetFails) {
    TempDir dir("cli_missing");
    const CliRun r = cli_run({"attack", "--dataset", (dir / "nope").string(), "--model", "lr", "--out",
                           (dir / "a").string()});
    EXPECT_NE(r.code, cli::kExitOk);
}

TEST(Cli, GenPufWritesConfig) {
    TempDir dir("cli_puf");
    const CliRun r = cli_run({"gen-puf", "--l", "5", "--seed", "9", "--out", (dir / "p.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "p.json"));
    EXPECT_EQ(j.at("puf").at("grid_side"), 5);
    EXPECT_EQ(j.at("puf").at("seed"), 9);
}

TEST(Cli, PipelineIsByteReproducible) {
    TempDir dir("cli_pipeline");
    for (const char* tag : {"1", "2"}) {
        const std::string t = tag;
        ASSERT_EQ(cli_run(small_dataset_args(dir / ("d" + t))).code, 0);
        ASSERT_EQ(cli_run({"attack", "--dataset", (dir / ("d" + t)).string(), "--model", "qrr", "--out",
                           (dir / ("a" + t)).string(), "--threshold", "0.3"})
                      .code,
                  0);
        ASSERT_EQ(cli_run({"report", "--attack", (dir / ("a" + t)).string()}).code, 0);
        ASSERT_EQ(cli_run({"eval-dataset", "--dataset", (dir / ("d" + t)).string(), "--out",
                           (dir / ("e" + t)).string(), "--sample", "10"})
                      .code,
                  0);
    }
    for (const char* f : {"manifest.json", "challenges.bin", "responses.f32", "bits_G1.bin", "bits_G2.bin"})
        EXPECT_EQ(slurp(dir.path() / "d1" / f), slurp(dir.path() / "d2" / f)) << f;
    for (const char* f : {"attack.json", "per_crp.csv", "summary.json", "fhd_boxplot.svg", "model.json", "model.f64"})
        EXPECT_EQ(slurp(dir.path() / "a1" / f), slurp(dir.path() / "a2" / f)) << f;
    for (const char* f : {"pairs.csv", "entropy.csv", "summary.json"})
        EXPECT_EQ(slurp(dir.path() / "e1" / f), slurp(dir.path() / "e2" / f)) << f;
    const Dataset d = load_dataset(dir / "d1");
    EXPECT_EQ(d.train_indices.size(), 54u);
    const auto attack = nlohmann::json::parse(slurp(dir / "a1" / "attack.json"));
    EXPECT_EQ(attack.at("threshold").at("value"), 0.3);
}

TEST(Cli, ImportRoundTrip) {
    TempDir dir("cli_import");
    ASSERT_EQ(cli_run(small_dataset_args(dir / "d", "12")).code, 0);
    export_external(load_dataset(dir / "d"), dir / "ext");
    const CliRun r = cli_run({"import", "--in", (dir / "ext").string(), "--out", (dir / "imp").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_dataset(dir / "imp").manifest.source, "imported");
}

TEST(Cli, ImportProblemsAreUsageErrors) {
    TempDir dir("cli_import_bad");
    std::filesystem::create_directories(dir / "ext" / "challenges");
    const CliRun r = cli_run({"import", "--in", (dir / "ext").string(), "--out", (dir / "imp").string()});
    EXPECT_EQ(r.code, cli::kExitInvalid);
    EXPECT_NE(r.err.find("images"), std::string::npos);
}

TEST(Cli, ThresholdNeedsNoise) {
    TempDir dir("cli_thr");
    ASSERT_EQ(cli_run(small_dataset_args(dir / "d", "12")).code, 0);
    EXPECT_NE(cli_run({"threshold", "--dataset", (dir / "d").string()}).code, 0);
    const CliRun r = cli_run({"threshold", "--dataset", (dir / "d").string(), "--noise", "0.05", "--pairs", "20", "--out",
                           (dir / "t").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "t" / "threshold.json"));
    EXPECT_TRUE(j.contains("threshold"));
}

TEST(Cli, MatrixAndScale) {
    TempDir dir("cli_matrix");
    nlohmann::json cfg{{"puf", {{"grid_side", 3}, {"image_side", 80}, {"crop_side", 64}, {"speckle_smoothing", 2.0},
                                {"scale_factor", 1}, {"seed", 0}, {"noise_std", 0.0}}}};
    std::ofstream(dir / "cfg.json") << cfg.dump();
    CliRun r = cli_run({"matrix", "--config", (dir / "cfg.json").string(), "--sizes", "3", "--schemes", "A,B", "--count",
                     "30", "--out", (dir / "m").string()});
    ASSERT_EQ(r.code, 0) << r.err << r.out;
    EXPECT_TRUE(std::filesystem::exists(dir / "m" / "matrix.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "m" / "l03_B" / "lr" / "per_crp.csv"));

    ASSERT_EQ(cli_run(small_dataset_args(dir / "s", "30")).code, 0);
    ASSERT_EQ(cli_run(small_dataset_args(dir / "l", "60")).code, 0);
    r = cli_run({"scale", "--small", (dir / "s").string(), "--large", (dir / "l").string(), "--out",
                 (dir / "sc").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "sc" / "scale.csv"));
}
