#include "puf_forge/external_import.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace puf_forge;
using puf_forge::testing::random_image;
using puf_forge::testing::small_puf;
using puf_forge::testing::TempDir;

namespace fs = std::filesystem;

namespace {

void write_crp(const fs::path& dir, std::size_t index, const Challenge& ch, const ResponseImage& img, int depth = 8) {
    fs::create_directories(dir / "challenges");
    fs::create_directories(dir / "images");
    std::ofstream(dir / "challenges" / (std::to_string(index) + ".txt")) << ch.to_string() << '\n';
    write_pgm(img, dir / "images" / (std::to_string(index) + ".pgm"), depth);
}

ImportFormat no_bits() {
    ImportFormat f;
    f.presets.clear();
    return f;
}

}  // namespace

TEST(Import, ExportImportRoundTrip) {
    TempDir dir("import_rt");
    DatasetSpec spec = dataset_spec_from_seed(small_puf(3, 5, 80, 64), SchemeType::C, 10, 5);
    Dataset d = generate_dataset(spec);
    quantize_to_storage(d);
    export_external(d, dir.path());
    const Dataset back = import_external(dir.path());
    EXPECT_EQ(back.manifest.source, "imported");
    EXPECT_EQ(back.manifest.count, 10u);
    EXPECT_EQ(back.manifest.response_rows, 64u);
    EXPECT_EQ(back.train_indices, d.train_indices);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(back.crps[i].challenge, d.crps[i].challenge);
        const double scale = d.crps[i].cropped.max_value();
        for (std::size_t p = 0; p < back.crps[i].cropped.pixels.size(); ++p)
            ASSERT_NEAR(back.crps[i].cropped.pixels[p] * scale, d.crps[i].cropped.pixels[p], 1e-6 * scale);
        // binarization is scale invariant, so the bits survive the trip
        for (GaborPreset p : {GaborPreset::G1, GaborPreset::G2})
            EXPECT_EQ(back.crps[i].bits.at(p).bits, d.crps[i].bits.at(p).bits);
    }
}

TEST(Import, MissingImageNamed) {
    TempDir dir("import_missing");
    for (std::size_t i = 0; i < 3; ++i) write_crp(dir.path(), i, Challenge::ones(3), random_image(8, 8, i));
    fs::remove(dir.path() / "images" / "1.pgm");
    try {
        import_external(dir.path(), no_bits());
        FAIL() << "expected ImportError";
    } catch (const ImportError& e) {
        ASSERT_EQ(e.problems().size(), 1u);
        EXPECT_NE(e.problems()[0].find("index 1"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("image file missing"), std::string::npos);
    }
}

TEST(Import, EveryProblemListed) {
    TempDir dir("import_many");
    for (std::size_t i = 0; i < 4; ++i) write_crp(dir.path(), i, Challenge::ones(3), random_image(8, 8, i));
    std::ofstream(dir.path() / "challenges" / "0.txt") << "0101x\n";
    std::ofstream(dir.path() / "challenges" / "2.txt") << "0101\n";
    std::ofstream(dir.path() / "images" / "3.pgm") << "P2\n8 8\n255\n";
    try {
        import_external(dir.path(), no_bits());
        FAIL() << "expected ImportError";
    } catch (const ImportError& e) {
        ASSERT_EQ(e.problems().size(), 3u) << e.what();
        EXPECT_NE(e.problems()[0].find("0.txt"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("2.txt"), std::string::npos);
        EXPECT_NE(e.problems()[2].find("3.pgm"), std::string::npos);
    }
}

TEST(Import, DefaultSplitOfTwoThousand) {
    TempDir dir("import_2000");
    const auto challenges = generate(3, SchemeType::A, 2000, 1);
    ResponseImage img(4, 4);
    for (std::size_t i = 0; i < 2000; ++i) {
        img.pixels.assign(16, static_cast<double>(i % 200 + 1));
        write_crp(dir.path(), i, challenges[i], img);
    }
    const Dataset d = import_external(dir.path(), no_bits());
    EXPECT_EQ(d.train_indices.size(), 1800u);
    EXPECT_EQ(d.test_indices.size(), 200u);
    EXPECT_EQ(d.crps[1999].challenge, challenges[1999]);
    EXPECT_EQ(d.manifest.original_bit_depth, 8);
}

TEST(Import, PgmDepthsAndScaling) {
    TempDir dir("import_pgm");
    ResponseImage img(2, 3);
    img.pixels = {0, 255, 128, 1, 2, 3};
    write_pgm(img, dir / "a.pgm", 8);
    int depth = 0;
    EXPECT_EQ(read_pgm(dir / "a.pgm", &depth), img);
    EXPECT_EQ(depth, 8);
    img.pixels = {0, 65535, 300, 1, 2, 40000};
    write_pgm(img, dir / "b.pgm", 16);
    EXPECT_EQ(read_pgm(dir / "b.pgm", &depth), img);
    EXPECT_EQ(depth, 16);

    for (std::size_t i = 0; i < 2; ++i) write_crp(dir / "set", i, Challenge::ones(3), img, 16);
    ImportFormat f = no_bits();
    f.crop_side = 2;
    f.train_count = 1;
    const Dataset d = import_external(dir / "set", f);
    EXPECT_EQ(d.manifest.original_bit_depth, 16);
    EXPECT_EQ(d.crps[0].cropped.max_value(), 1.0);
    EXPECT_EQ(d.crps[0].cropped.rows, 2u);
}

TEST(Import, PfmBottomRowFirst) {
    TempDir dir("import_pfm");
    {
        std::ofstream out(dir / "x.pfm", std::ios::binary);
        out << "Pf\n2 2\n-1.0\n";
        const float rows[] = {1.0f, 2.0f, 3.0f, 4.0f};  // file order: bottom row, then top
        out.write(reinterpret_cast<const char*>(rows), sizeof rows);
    }
    const ResponseImage img = read_pfm(dir / "x.pfm");
    EXPECT_EQ(img.at(1, 0), 1.0);
    EXPECT_EQ(img.at(1, 1), 2.0);
    EXPECT_EQ(img.at(0, 0), 3.0);
    write_pfm(img, dir / "y.pfm");
    EXPECT_EQ(read_pfm(dir / "y.pfm"), img);
}

TEST(Import, CropLargerThanImageRejected) {
    TempDir dir("import_crop");
    write_crp(dir.path(), 0, Challenge::ones(3), random_image(8, 8, 1));
    ImportFormat f = no_bits();
    f.crop_side = 9;
    f.train_count = 0;
    EXPECT_THROW(import_external(dir.path(), f), ImportError);
}
