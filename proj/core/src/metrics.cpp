#include "puf_forge/metrics.hpp"

#include "puf_forge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

void to_json(nlohmann::json& j, const BoxplotSummary& s) {
    j = nlohmann::json{{"count", s.count},        {"mean", s.mean},
                       {"min", s.min},            {"max", s.max},
                       {"q1", s.q1},              {"median", s.median},
                       {"q3", s.q3},              {"whisker_low", s.whisker_low},
                       {"whisker_high", s.whisker_high}, {"outliers", s.outliers}};
}

double fhd(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("fhd: length mismatch " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    if (a.empty()) throw std::invalid_argument("fhd: empty bitstrings");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] != b[i]);
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

double fhd(const BitResponse& a, const BitResponse& b) { return fhd(a.bits, b.bits); }

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t sample_size,
                                        std::uint64_t rng_seed) {
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(sample_size, population);
    Rng rng(rng_seed, 0x5A4D504CULL);
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

MetricsReport dataset_fhd(std::span<const BitResponse> responses, std::size_t sample_size,
                          std::uint64_t rng_seed) {
    if (responses.size() < 2) throw std::invalid_argument("dataset_fhd: need at least 2 responses");
    const auto idx = sample_indices(responses.size(), sample_size, rng_seed);
    MetricsReport report;
    report.values.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
            report.values.push_back(fhd(responses[idx[a]], responses[idx[b]]));
    if (report.values.empty()) throw std::invalid_argument("dataset_fhd: sample size must be >= 2");
    report.summary = boxplot_stats(report.values);
    return report;
}

double shannon_entropy(const ResponseImage& img, int bits) {
    if (img.empty()) throw std::invalid_argument("shannon_entropy: empty image");
    if (bits < 1 || bits > 24) throw std::invalid_argument("shannon_entropy: bits must be in [1, 24]");
    const std::size_t bins = std::size_t{1} << bits;
    const double peak = img.max_value();
    std::vector<std::size_t> counts(bins, 0);
    for (double v : img.pixels) {
        const double u = peak > 0.0 ? std::max(v, 0.0) / peak : 0.0;
        const auto b = std::min(bins - 1, static_cast<std::size_t>(u * static_cast<double>(bins)));
        ++counts[b];
    }
    const auto total = static_cast<double>(img.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson: size mismatch " + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 values");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw std::invalid_argument("pearson: constant input has undefined correlation");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const ResponseImage& x, const ResponseImage& y) { return pearson(x.pixels, y.pixels); }

double ssim(const ResponseImage& x, const ResponseImage& y, std::size_t window) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw std::invalid_argument("ssim: dimension mismatch");
    if (window == 0 || window > x.rows || window > x.cols)
        throw std::invalid_argument("ssim: window " + std::to_string(window) + " larger than image");
    constexpr double k1 = 0.01, k2 = 0.03, range = 1.0;
    constexpr double c1 = (k1 * range) * (k1 * range);
    constexpr double c2 = (k2 * range) * (k2 * range);
    const auto area = static_cast<double>(window * window);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r = 0; r + window <= x.rows; ++r) {
        for (std::size_t c = 0; c + window <= x.cols; ++c) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = r; i < r + window; ++i)
                for (std::size_t j = c; j < c + window; ++j) {
                    const double a = x.at(i, j);
                    const double b = y.at(i, j);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            const double mx = sx / area, my = sy / area;
            const double vx = sxx / area - mx * mx;
            const double vy = syy / area - my * my;
            const double cov = sxy / area - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotSummary boxplot_stats(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("boxplot_stats: no values");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    BoxplotSummary s;
    s.count = v.size();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.min = v.front();
    s.max = v.back();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    const double iqr = s.q3 - s.q1;
    const double low_fence = s.q1 - 1.5 * iqr;
    const double high_fence = s.q3 + 1.5 * iqr;
    bool any_inside = false;
    for (double x : v) {
        if (x < low_fence || x > high_fence) {
            s.outliers.push_back(x);
            continue;
        }
        if (!any_inside) s.whisker_low = x;
        s.whisker_high = x;
        any_inside = true;
    }
    return s;
}

std::size_t threshold_errors(std::span<const double> like, std::span<const double> unlike,
                             double threshold) {
    std::size_t errors = 0;
    for (double v : like) errors += v > threshold;
    for (double v : unlike) errors += v <= threshold;
    return errors;
}

double crossover_threshold(std::span<const double> like, std::span<const double> unlike) {
    if (like.empty() || unlike.empty())
        throw std::invalid_argument("crossover_threshold: both samples must be nonempty");
    const double mean_like = std::accumulate(like.begin(), like.end(), 0.0) / static_cast<double>(like.size());
    const double mean_unlike =
        std::accumulate(unlike.begin(), unlike.end(), 0.0) / static_cast<double>(unlike.size());
    if (!(mean_like < mean_unlike))
        throw std::invalid_argument("crossover_threshold: like mean must be below unlike mean");

    // Sweep the sorted distinct values. Interval k is [v_k, v_{k+1}) for
    // k >= 0, with interval -1 = (-inf, v_0) and the last one unbounded above.
    struct Event { double value; int like; int unlike; };
    std::vector<Event> events;
    events.reserve(like.size() + unlike.size());
    for (double v : like) events.push_back({v, 1, 0});
    for (double v : unlike) events.push_back({v, 0, 1});
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.value < b.value; });

    std::vector<double> distinct;
    std::vector<std::size_t> errors;  // errors[k + 1] for interval k
    std::size_t like_above = like.size();
    std::size_t unlike_at_or_below = 0;
    errors.push_back(like_above);
    for (std::size_t i = 0; i < events.size();) {
        const double v = events[i].value;
        while (i < events.size() && events[i].value == v) {
            like_above -= static_cast<std::size_t>(events[i].like);
            unlike_at_or_below += static_cast<std::size_t>(events[i].unlike);
            ++i;
        }
        distinct.push_back(v);
        errors.push_back(like_above + unlike_at_or_below);
    }

    const std::size_t best = *std::min_element(errors.begin(), errors.end());
    std::size_t first = 0;
    while (errors[first] != best) ++first;
    std::size_t last = first;
    while (last + 1 < errors.size() && errors[last + 1] == best) ++last;

    // run covers intervals first-1 .. last-1, i.e. [lower, upper)
    const bool open_below = first == 0;
    const bool open_above = last == errors.size() - 1;
    if (open_below && open_above) return distinct.front();  // unreachable with nonempty samples
    if (open_below) return std::nextafter(distinct[last], -std::numeric_limits<double>::infinity());
    const double lower = distinct[first - 1];
    if (open_above) return lower;
    const double upper = distinct[last];
    return 0.5 * (lower + upper);
}

}  // namespace puf_forge
