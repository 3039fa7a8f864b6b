#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace puf_forge {

enum class Normalization { raw, unit_max };

/// Nonnegative intensity grid, row-major.
struct ResponseImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;
    Normalization normalization = Normalization::raw;

    ResponseImage() = default;
    ResponseImage(std::size_t rows_, std::size_t cols_, double fill = 0.0)
        : rows(rows_), cols(cols_), pixels(rows_ * cols_, fill) {}
    ResponseImage(std::size_t rows_, std::size_t cols_, std::vector<double> values,
                  Normalization norm = Normalization::raw);

    std::size_t size() const { return pixels.size(); }
    bool empty() const { return pixels.empty(); }

    double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {pixels.data() + r * cols, cols};
    }

    double max_value() const;
    double total() const;

    friend bool operator==(const ResponseImage&, const ResponseImage&) = default;
};

/// Divides by the maximum; an identically zero image is returned unchanged.
ResponseImage unit_max(const ResponseImage& img);

/// Averages non-overlapping factor x factor blocks. Dimensions must be divisible.
ResponseImage box_downsample(const ResponseImage& img, std::size_t factor);

/// Nearest-neighbour resize to rows x cols.
ResponseImage upsample_nearest(const ResponseImage& img, std::size_t rows, std::size_t cols);

/// Clamps negative pixels to zero in place.
void clamp_nonnegative(ResponseImage& img);

}  // namespace puf_forge
