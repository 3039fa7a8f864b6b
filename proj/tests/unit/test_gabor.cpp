#include "puf_forge/gabor.hpp"
#include "puf_forge/metrics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace puf_forge;
using puf_forge::testing::random_image;

namespace {

double tap_mean(const GaborKernel& k) {
    return std::accumulate(k.taps.begin(), k.taps.end(), 0.0) / static_cast<double>(k.taps.size());
}

// Direct evaluation of the zero-padded same-size convolution.
double convolve_at(const ResponseImage& img, const GaborKernel& k, std::ptrdiff_t r, std::ptrdiff_t c) {
    double acc = 0.0;
    const auto kh = static_cast<std::ptrdiff_t>(k.height), kw = static_cast<std::ptrdiff_t>(k.width);
    for (std::ptrdiff_t i = 0; i < kh; ++i)
        for (std::ptrdiff_t j = 0; j < kw; ++j) {
            const std::ptrdiff_t y = r + kh / 2 - i;
            const std::ptrdiff_t x = c + kw / 2 - j;
            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(img.rows) ||
                x >= static_cast<std::ptrdiff_t>(img.cols))
                continue;
            acc += k.tap(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) *
                   img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        }
    return acc;
}

}  // namespace

TEST(GaborKernel, PresetShapesAndZeroMean) {
    const GaborKernel g1 = make_kernel(GaborPreset::G1);
    EXPECT_EQ(g1.height, 35u);
    EXPECT_EQ(g1.width, 35u);
    EXPECT_LT(std::abs(tap_mean(g1)), 1e-6);
    const GaborKernel g2 = make_kernel(GaborPreset::G2);
    EXPECT_EQ(g2.height, 9u);
    EXPECT_EQ(g2.width, 51u);
    EXPECT_LT(std::abs(tap_mean(g2)), 1e-6);
    for (double t : g1.taps) EXPECT_TRUE(std::isfinite(t));
}

TEST(GaborKernel, InfiniteWavelengthIsMeanSubtractedGaussian) {
    GaborParams p{3, 3, std::numeric_limits<double>::infinity(), 0.3, 0.0, 1.5, 0.8};
    const GaborKernel k = make_kernel(p);
    std::vector<double> g(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const double x = c - 1, y = r - 1;
            const double xr = x * std::cos(0.3) + y * std::sin(0.3);
            const double yr = -x * std::sin(0.3) + y * std::cos(0.3);
            g[static_cast<std::size_t>(r * 3 + c)] = std::exp(-0.5 * (xr * xr / 2.25 + yr * yr / 0.64));
        }
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / 9.0;
    for (double& v : g) v -= mean;
    // proportional: the least-squares scale reproduces every tap
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
        num += k.taps[i] * g[i];
        den += g[i] * g[i];
    }
    const double scale = num / den;
    EXPECT_GT(scale, 0.0);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(k.taps[i], scale * g[i], 1e-12);
}

TEST(GaborKernel, RejectsEvenOrDegenerateShapes) {
    GaborParams p;
    p.height = 34;
    EXPECT_THROW(make_kernel(p), std::invalid_argument);
    p = GaborParams{};
    p.width = 0;
    EXPECT_THROW(make_kernel(p), std::invalid_argument);
    p = GaborParams{};
    p.sigma_x = 0.0;
    EXPECT_THROW(make_kernel(p), std::invalid_argument);
    p = GaborParams{};
    p.wavelength = -1.0;
    EXPECT_THROW(make_kernel(p), std::invalid_argument);
}

TEST(GaborFilter, MatchesDirectConvolution) {
    const ResponseImage img = random_image(13, 17, 4);
    GaborParams p{5, 7, 4.0, 0.7, 0.4, 1.5, 2.5};
    const GaborKernel k = make_kernel(p);
    const ResponseImage out = gabor_filter(img, k);
    for (std::ptrdiff_t r = 0; r < 13; ++r)
        for (std::ptrdiff_t c = 0; c < 17; ++c)
            EXPECT_NEAR(out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)), convolve_at(img, k, r, c),
                        1e-12);
}

TEST(GaborBinarize, ConstantImageIsAllOnes) {
    const ResponseImage flat(64, 64, 0.37);
    for (GaborPreset preset : kAllPresets) {
        const BitResponse bits = gabor_binarize(flat, make_kernel(preset));
        // interior values are exactly zero up to rounding, hence ties -> 1
        const GaborKernel k = make_kernel(preset);
        for (std::size_t r = k.height / 2; r + k.height / 2 < 64; ++r)
            for (std::size_t c = k.width / 2; c + k.width / 2 < 64; ++c) ASSERT_EQ(bits.bits[r * 64 + c], 1);
    }
}

TEST(GaborBinarize, ScaleInvariant) {
    const ResponseImage img = random_image(128, 128, 8);
    ResponseImage twice = img, tenth = img;
    for (double& v : twice.pixels) v *= 2.0;
    for (double& v : tenth.pixels) v *= 0.1;
    for (GaborPreset preset : kAllPresets) {
        const GaborKernel k = make_kernel(preset);
        const BitResponse a = gabor_binarize(img, k);
        EXPECT_EQ(a, gabor_binarize(twice, k));
        EXPECT_EQ(a, gabor_binarize(tenth, k));
        EXPECT_EQ(a.size(), 16384u);
    }
}

TEST(GaborBinarize, KernelLargerThanImageThrows) {
    EXPECT_THROW(gabor_binarize(ResponseImage(64, 40), make_kernel(GaborPreset::G2)), std::invalid_argument);
    EXPECT_THROW(gabor_binarize(ResponseImage(30, 64), make_kernel(GaborPreset::G1)), std::invalid_argument);
}

TEST(GaborBinarize, IndependentPufsDecorrelate) {
    PufConfig a = puf_forge::testing::small_puf(5, 100, 160, 128);
    PufConfig b = a;
    b.seed = 200;
    const TransmissionMatrix pa = build_puf(a), pb = build_puf(b);
    const GaborKernel k = make_kernel(GaborPreset::G1);
    double total = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const Challenge ch = generate_one(5, SchemeType::A, 3, i);
        total += fhd(gabor_binarize(respond_cropped(pa, ch, 128), k), gabor_binarize(respond_cropped(pb, ch, 128), k));
    }
    const double mean = total / 100.0;
    EXPECT_GE(mean, 0.4);
    EXPECT_LE(mean, 0.6);
}

TEST(GaborPreset, ParseRoundTrip) {
    for (GaborPreset p : kAllPresets) EXPECT_EQ(parse_preset(to_string(p)), p);
    EXPECT_THROW(parse_preset("G3"), std::invalid_argument);
}
