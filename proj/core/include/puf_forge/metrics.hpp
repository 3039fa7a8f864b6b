#pragma once

#include "puf_forge/gabor.hpp"
#include "puf_forge/image.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace puf_forge {

/// Boxplot summary. Quartiles use linear interpolation between order
/// statistics; whiskers reach the furthest sample within 1.5 IQR of the box.
struct BoxplotSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
};

void to_json(nlohmann::json& j, const BoxplotSummary& s);

struct MetricsReport {
    std::vector<double> values;  // one per pair or per image
    BoxplotSummary summary;
};

/// Fractional Hamming distance. Throws std::invalid_argument on length mismatch.
double fhd(const BitResponse& a, const BitResponse& b);
double fhd(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Samples min(sample_size, count) responses without replacement and reports
/// the FHD of every unordered pair among them.
MetricsReport dataset_fhd(std::span<const BitResponse> responses, std::size_t sample_size = 300,
                          std::uint64_t rng_seed = 0);

/// Indices chosen by dataset_fhd for the given sizes and seed (sorted).
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t sample_size,
                                        std::uint64_t rng_seed);

/// Base-2 entropy of the unit-max image quantized to 2^bits uniform bins.
double shannon_entropy(const ResponseImage& img, int bits = 8);

/// Sample Pearson correlation; throws std::invalid_argument if either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(const ResponseImage& x, const ResponseImage& y);

inline constexpr std::size_t kSsimWindow = 8;

/// Mean SSIM over every 8x8 window (stride 1) with L = 1, K1 = 0.01, K2 = 0.03.
/// Window statistics use population (1/N) moments.
double ssim(const ResponseImage& x, const ResponseImage& y, std::size_t window = kSsimWindow);

BoxplotSummary boxplot_stats(std::span<const double> values);

/// Linear-interpolation quantile of sorted data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Threshold t minimizing #{like > t} + #{unlike <= t}. Among optimal
/// thresholds the lowest contiguous optimal interval is chosen and its
/// midpoint returned; an interval unbounded below yields the value just
/// under its upper end, one unbounded above yields its lower end.
/// Throws std::invalid_argument if a sample is empty or mean(like) >= mean(unlike).
double crossover_threshold(std::span<const double> like, std::span<const double> unlike);

/// Misclassification count of a threshold under the rule above.
std::size_t threshold_errors(std::span<const double> like, std::span<const double> unlike,
                             double threshold);

}  // namespace puf_forge
