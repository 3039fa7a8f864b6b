#pragma once

#include "puf_forge/image.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace puf_forge {

enum class GaborPreset { G1, G2 };

std::string_view to_string(GaborPreset preset);
GaborPreset parse_preset(std::string_view text);
inline constexpr GaborPreset kAllPresets[] = {GaborPreset::G1, GaborPreset::G2};

/// Real-part Daugman Gabor: cos(2 pi x'/wavelength + phase) under an
/// anisotropic Gaussian, x' = x cos(theta) + y sin(theta),
/// y' = -x sin(theta) + y cos(theta). x runs along columns, y along rows.
struct GaborParams {
    std::size_t height = 35;
    std::size_t width = 35;
    double wavelength = 8.0;   // pixels; +inf gives a pure Gaussian
    double orientation = 0.0;  // radians
    double phase = 0.0;
    double sigma_x = 6.0;
    double sigma_y = 6.0;
};

/// Preset parameters: G1 35x35 (8 px, theta 0, sigma 6/6),
/// G2 9x51 (12 px, theta pi/2, sigma 2/12).
GaborParams preset_params(GaborPreset preset);

struct GaborKernel {
    GaborParams params;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> taps;  // row-major, mean-subtracted

    double tap(std::size_t r, std::size_t c) const { return taps[r * width + c]; }
};

/// Throws std::invalid_argument for even or zero dimensions or non-positive sigmas.
GaborKernel make_kernel(const GaborParams& params);
GaborKernel make_kernel(GaborPreset preset);

/// Flattened binary response of a q x q image.
struct BitResponse {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    friend bool operator==(const BitResponse&, const BitResponse&) = default;
};

/// Zero-padded, same-size 2D convolution.
ResponseImage gabor_filter(const ResponseImage& img, const GaborKernel& kernel);

/// gabor_filter followed by bit = (value >= 0), row-major.
/// Throws std::invalid_argument if the kernel exceeds the image in either dimension.
BitResponse gabor_binarize(const ResponseImage& img, const GaborKernel& kernel);

}  // namespace puf_forge
