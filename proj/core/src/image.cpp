#include "puf_forge/image.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

ResponseImage::ResponseImage(std::size_t rows_, std::size_t cols_, std::vector<double> values,
                             Normalization norm)
    : rows(rows_), cols(cols_), pixels(std::move(values)), normalization(norm) {
    if (pixels.size() != rows * cols)
        throw std::invalid_argument("ResponseImage: " + std::to_string(pixels.size()) +
                                    " pixels for a " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " grid");
}

double ResponseImage::max_value() const {
    if (pixels.empty()) return 0.0;
    return *std::max_element(pixels.begin(), pixels.end());
}

double ResponseImage::total() const {
    return std::accumulate(pixels.begin(), pixels.end(), 0.0);
}

ResponseImage unit_max(const ResponseImage& img) {
    ResponseImage out = img;
    out.normalization = Normalization::unit_max;
    const double peak = img.max_value();
    if (peak <= 0.0) return out;
    for (double& v : out.pixels) v /= peak;
    return out;
}

ResponseImage box_downsample(const ResponseImage& img, std::size_t factor) {
    if (factor == 0 || img.rows % factor != 0 || img.cols % factor != 0)
        throw std::invalid_argument("box_downsample: factor " + std::to_string(factor) +
                                    " does not divide " + std::to_string(img.rows) + "x" +
                                    std::to_string(img.cols));
    ResponseImage out(img.rows / factor, img.cols / factor);
    out.normalization = img.normalization;
    const double scale = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            double sum = 0.0;
            for (std::size_t dr = 0; dr < factor; ++dr)
                for (std::size_t dc = 0; dc < factor; ++dc)
                    sum += img.at(r * factor + dr, c * factor + dc);
            out.at(r, c) = sum * scale;
        }
    }
    return out;
}

ResponseImage upsample_nearest(const ResponseImage& img, std::size_t rows, std::size_t cols) {
    if (img.empty()) throw std::invalid_argument("upsample_nearest: empty image");
    ResponseImage out(rows, cols);
    out.normalization = img.normalization;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t sr = r * img.rows / rows;
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = img.at(sr, c * img.cols / cols);
    }
    return out;
}

void clamp_nonnegative(ResponseImage& img) {
    for (double& v : img.pixels) v = std::max(v, 0.0);
}

}  // namespace puf_forge
