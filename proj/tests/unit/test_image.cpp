#include "puf_forge/image.hpp"

#include <gtest/gtest.h>

using namespace puf_forge;

TEST(Image, UnitMaxHasPeakOne) {
    ResponseImage img(2, 2, {0.5, 2.0, 1.0, 0.0});
    const ResponseImage u = unit_max(img);
    EXPECT_EQ(u.max_value(), 1.0);
    EXPECT_EQ(u.normalization, Normalization::unit_max);
    EXPECT_DOUBLE_EQ(u.at(0, 0), 0.25);
}

TEST(Image, UnitMaxOfZeroImageIsZero) {
    const ResponseImage u = unit_max(ResponseImage(3, 3));
    for (double v : u.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Image, BoxDownsampleAveragesBlocks) {
    ResponseImage img(2, 4, {1, 3, 0, 0, 5, 7, 4, 4});
    const ResponseImage d = box_downsample(img, 2);
    ASSERT_EQ(d.rows, 1u);
    ASSERT_EQ(d.cols, 2u);
    EXPECT_DOUBLE_EQ(d.at(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(d.at(0, 1), 2.0);
    EXPECT_THROW(box_downsample(img, 3), std::invalid_argument);
}

TEST(Image, NearestUpsampleReplicates) {
    ResponseImage img(2, 2, {1, 2, 3, 4});
    const ResponseImage u = upsample_nearest(img, 4, 4);
    EXPECT_EQ(u.at(0, 0), 1);
    EXPECT_EQ(u.at(1, 1), 1);
    EXPECT_EQ(u.at(1, 2), 2);
    EXPECT_EQ(u.at(3, 0), 3);
    EXPECT_EQ(u.at(3, 3), 4);
}

TEST(Image, ClampRemovesNegatives) {
    ResponseImage img(1, 3, {-1.0, 0.0, 2.0});
    clamp_nonnegative(img);
    EXPECT_EQ(img.pixels, (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Image, SizeMismatchThrows) {
    EXPECT_THROW(ResponseImage(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
}
