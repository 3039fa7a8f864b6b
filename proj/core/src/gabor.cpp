#include "puf_forge/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace puf_forge {

std::string_view to_string(GaborPreset preset) {
    return preset == GaborPreset::G1 ? "G1" : "G2";
}

GaborPreset parse_preset(std::string_view text) {
    if (text == "G1" || text == "g1") return GaborPreset::G1;
    if (text == "G2" || text == "g2") return GaborPreset::G2;
    throw std::invalid_argument("unknown Gabor preset '" + std::string(text) + "'");
}

GaborParams preset_params(GaborPreset preset) {
    if (preset == GaborPreset::G1) return GaborParams{35, 35, 8.0, 0.0, 0.0, 6.0, 6.0};
    return GaborParams{9, 51, 12.0, std::numbers::pi / 2.0, 0.0, 2.0, 12.0};
}

GaborKernel make_kernel(const GaborParams& params) {
    if (params.height == 0 || params.width == 0 || params.height % 2 == 0 || params.width % 2 == 0)
        throw std::invalid_argument("Gabor kernel dimensions must be odd, got " +
                                    std::to_string(params.height) + "x" +
                                    std::to_string(params.width));
    if (!(params.sigma_x > 0.0) || !(params.sigma_y > 0.0))
        throw std::invalid_argument("Gabor envelope sigmas must be positive");
    if (!(params.wavelength > 0.0))
        throw std::invalid_argument("Gabor wavelength must be positive");

    GaborKernel k{params, params.height, params.width, {}};
    k.taps.resize(k.height * k.width);
    const auto cy = static_cast<double>(k.height / 2);
    const auto cx = static_cast<double>(k.width / 2);
    const double cos_t = std::cos(params.orientation);
    const double sin_t = std::sin(params.orientation);
    const double frequency = std::isinf(params.wavelength) ? 0.0 : 2.0 * std::numbers::pi / params.wavelength;
    double mean = 0.0;
    for (std::size_t r = 0; r < k.height; ++r) {
        for (std::size_t c = 0; c < k.width; ++c) {
            const double x = static_cast<double>(c) - cx;
            const double y = static_cast<double>(r) - cy;
            const double xr = x * cos_t + y * sin_t;
            const double yr = -x * sin_t + y * cos_t;
            const double envelope = std::exp(-0.5 * (xr * xr / (params.sigma_x * params.sigma_x) +
                                                     yr * yr / (params.sigma_y * params.sigma_y)));
            const double value = envelope * std::cos(frequency * xr + params.phase);
            k.taps[r * k.width + c] = value;
            mean += value;
        }
    }
    mean /= static_cast<double>(k.taps.size());
    for (double& t : k.taps) t -= mean;
    return k;
}

GaborKernel make_kernel(GaborPreset preset) { return make_kernel(preset_params(preset)); }

ResponseImage gabor_filter(const ResponseImage& img, const GaborKernel& kernel) {
    if (kernel.height > img.rows || kernel.width > img.cols)
        throw std::invalid_argument("Gabor kernel " + std::to_string(kernel.height) + "x" +
                                    std::to_string(kernel.width) + " is larger than image " +
                                    std::to_string(img.rows) + "x" + std::to_string(img.cols));
    const auto rows = static_cast<std::ptrdiff_t>(img.rows);
    const auto cols = static_cast<std::ptrdiff_t>(img.cols);
    const auto kh = static_cast<std::ptrdiff_t>(kernel.height);
    const auto kw = static_cast<std::ptrdiff_t>(kernel.width);
    const std::ptrdiff_t ry = kh / 2;
    const std::ptrdiff_t rx = kw / 2;

    ResponseImage out(img.rows, img.cols);
    // out(r, c) = sum_{i,j} k(i, j) * img(r + ry - i, c + rx - j), i.e. a true convolution.
    // Accumulate one kernel tap at a time over whole output rows so the inner loop is contiguous.
    for (std::ptrdiff_t i = 0; i < kh; ++i) {
        const std::ptrdiff_t dy = ry - i;
        for (std::ptrdiff_t j = 0; j < kw; ++j) {
            const double w = kernel.taps[static_cast<std::size_t>(i * kw + j)];
            const std::ptrdiff_t dx = rx - j;
            const std::ptrdiff_t c_begin = std::max<std::ptrdiff_t>(0, -dx);
            const std::ptrdiff_t c_end = std::min(cols, cols - dx);
            for (std::ptrdiff_t r = std::max<std::ptrdiff_t>(0, -dy); r < std::min(rows, rows - dy); ++r) {
                const double* src = img.pixels.data() + (r + dy) * cols;
                double* dst = out.pixels.data() + r * cols;
                for (std::ptrdiff_t c = c_begin; c < c_end; ++c) dst[c] += w * src[c + dx];
            }
        }
    }
    return out;
}

BitResponse gabor_binarize(const ResponseImage& img, const GaborKernel& kernel) {
    const ResponseImage filtered = gabor_filter(img, kernel);
    // Responses within accumulated rounding of zero count as ties (-> 1), so a
    // zero-mean kernel over a flat region binarizes as exactly zero would.
    double kernel_l1 = 0.0;
    for (double t : kernel.taps) kernel_l1 += std::abs(t);
    double peak = 0.0;
    for (double v : img.pixels) peak = std::max(peak, std::abs(v));
    const double tie = 64.0 * std::numeric_limits<double>::epsilon() * kernel_l1 * peak;
    BitResponse out{img.rows, img.cols, std::vector<std::uint8_t>(filtered.size())};
    for (std::size_t i = 0; i < filtered.size(); ++i)
        out.bits[i] = filtered.pixels[i] >= -tie ? 1 : 0;
    return out;
}

}  // namespace puf_forge
