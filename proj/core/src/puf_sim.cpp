#include "puf_forge/puf_sim.hpp"

#include "puf_forge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace puf_forge {

void PufConfig::validate() const {
    if (grid_side < 3 || grid_side % 2 == 0)
        throw std::invalid_argument("grid side must be odd and >= 3, got " +
                                    std::to_string(grid_side));
    if (image_side == 0) throw std::invalid_argument("image side must be positive");
    if (crop_side == 0 || crop_side > image_side)
        throw std::invalid_argument("crop side " + std::to_string(crop_side) +
                                    " must be in [1, image side " + std::to_string(image_side) +
                                    "]");
    if (!(speckle_smoothing >= 0.0) || !std::isfinite(speckle_smoothing))
        throw std::invalid_argument("speckle smoothing must be finite and >= 0");
    if (scale_factor != 1 && scale_factor != 2)
        throw std::invalid_argument("scale factor must be 1 or 2");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
        throw std::invalid_argument("noise std must be finite and >= 0");
}

void to_json(nlohmann::json& j, const PufConfig& c) {
    j = nlohmann::json{{"grid_side", c.grid_side},
                       {"image_side", c.image_side},
                       {"crop_side", c.crop_side},
                       {"speckle_smoothing", c.speckle_smoothing},
                       {"scale_factor", c.scale_factor},
                       {"seed", c.seed},
                       {"noise_std", c.noise_std}};
}

void from_json(const nlohmann::json& j, PufConfig& c) {
    PufConfig d;
    c.grid_side = j.value("grid_side", d.grid_side);
    c.image_side = j.value("image_side", d.image_side);
    c.crop_side = j.value("crop_side", d.crop_side);
    c.speckle_smoothing = j.value("speckle_smoothing", d.speckle_smoothing);
    c.scale_factor = j.value("scale_factor", d.scale_factor);
    c.seed = j.value("seed", d.seed);
    c.noise_std = j.value("noise_std", d.noise_std);
}

TransmissionMatrix::TransmissionMatrix(PufConfig config, std::vector<Field> patterns)
    : config_(std::move(config)), patterns_(std::move(patterns)) {
    config_.validate();
    const std::size_t expected = config_.blocks() * config_.image_side * config_.image_side;
    if (patterns_.size() != expected)
        throw std::invalid_argument("transmission matrix needs " + std::to_string(expected) +
                                    " field values, got " + std::to_string(patterns_.size()));
    for (const Field& f : patterns_)
        if (!std::isfinite(f.real()) || !std::isfinite(f.imag()))
            throw std::invalid_argument("transmission matrix contains non-finite values");
}

std::span<const Field> TransmissionMatrix::pattern(std::size_t block) const {
    const std::size_t area = side() * side();
    return std::span<const Field>(patterns_).subspan(block * area, area);
}

TransmissionMatrix TransmissionMatrix::refined(std::size_t factor) const {
    if (factor == 0) throw std::invalid_argument("refine factor must be >= 1");
    PufConfig fine = config_;
    fine.grid_side = config_.grid_side * factor;
    const std::size_t area = side() * side();
    const double share = 1.0 / static_cast<double>(factor * factor);
    std::vector<Field> patterns(fine.grid_side * fine.grid_side * area);
    for (std::size_t r = 0; r < fine.grid_side; ++r) {
        for (std::size_t c = 0; c < fine.grid_side; ++c) {
            const auto parent = pattern((r / factor) * config_.grid_side + c / factor);
            Field* dst = patterns.data() + (r * fine.grid_side + c) * area;
            for (std::size_t i = 0; i < area; ++i) dst[i] = parent[i] * share;
        }
    }
    // fine grids may be even, which validate() rejects
    return TransmissionMatrix(Unchecked{}, fine, std::move(patterns));
}

double envelope_sigma(const PufConfig& config) {
    const double p = static_cast<double>(config.image_side);
    return config.scale_factor == 2 ? p / 3.0 : p / 6.0;
}

namespace {

std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        taps[static_cast<std::size_t>(i + radius)] = w;
        norm += w;
    }
    for (double& w : taps) w /= norm;
    return taps;
}

// Smooths a (p + 2R)^2 white field down to p^2 with the separable kernel
// (valid region only, so the speckle statistics are stationary up to the border).
std::vector<Field> smooth_valid(const std::vector<Field>& padded, std::size_t padded_side,
                                const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t out_side = padded_side - (k - 1);
    std::vector<Field> rows(padded_side * out_side);
    for (std::size_t r = 0; r < padded_side; ++r)
        for (std::size_t c = 0; c < out_side; ++c) {
            Field sum{};
            for (std::size_t t = 0; t < k; ++t) sum += taps[t] * padded[r * padded_side + c + t];
            rows[r * out_side + c] = sum;
        }
    std::vector<Field> out(out_side * out_side);
    for (std::size_t r = 0; r < out_side; ++r)
        for (std::size_t c = 0; c < out_side; ++c) {
            Field sum{};
            for (std::size_t t = 0; t < k; ++t) sum += taps[t] * rows[(r + t) * out_side + c];
            out[r * out_side + c] = sum;
        }
    return out;
}

}  // namespace

TransmissionMatrix build_puf(const PufConfig& config) {
    config.validate();
    const std::size_t p = config.image_side;
    const std::size_t n = config.blocks();
    const std::vector<double> taps = gaussian_taps(config.speckle_smoothing);
    const std::size_t padded_side = p + taps.size() - 1;

    // white samples have E|z|^2 = 2; smoothing multiplies that by sum w_i^2
    double tap_energy = 0.0;
    for (double w : taps) tap_energy += w * w;
    const double scale = std::sqrt(0.5 / tap_energy);

    const double sigma = envelope_sigma(config);
    const double center = 0.5 * static_cast<double>(p - 1);
    std::vector<double> envelope(p * p);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) {
            const double dr = static_cast<double>(r) - center;
            const double dc = static_cast<double>(c) - center;
            envelope[r * p + c] = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
        }

    const std::uint64_t geometry_seed =
        derive_seed(config.seed, static_cast<std::uint64_t>(config.scale_factor));
    std::vector<Field> patterns(n * p * p);
    for (std::size_t j = 0; j < n; ++j) {
        Rng rng(geometry_seed, j);
        std::vector<Field> white(padded_side * padded_side);
        for (Field& z : white) {
            const double re = rng.normal();
            const double im = rng.normal();
            z = Field(re, im);
        }
        const std::vector<Field> smooth = taps.size() == 1 ? white : smooth_valid(white, padded_side, taps);
        Field* dst = patterns.data() + j * p * p;
        for (std::size_t i = 0; i < p * p; ++i) dst[i] = smooth[i] * (scale * envelope[i]);
    }
    return TransmissionMatrix(config, std::move(patterns));
}

namespace {

ResponseImage evaluate_window(const TransmissionMatrix& puf, const Challenge& challenge,
                              std::size_t offset, std::size_t window, bool add_noise,
                              std::uint64_t noise_stream) {
    if (challenge.size() != puf.blocks())
        throw std::invalid_argument("challenge length " + std::to_string(challenge.size()) +
                                    " does not match the PUF's " + std::to_string(puf.blocks()) +
                                    " blocks");
    const std::size_t p = puf.side();
    std::vector<Field> field(window * window, Field{});
    for (std::size_t j = 0; j < challenge.size(); ++j) {
        if (!challenge[j]) continue;
        const auto t = puf.pattern(j);
        for (std::size_t r = 0; r < window; ++r) {
            const Field* src = t.data() + (r + offset) * p + offset;
            Field* dst = field.data() + r * window;
            for (std::size_t c = 0; c < window; ++c) dst[c] += src[c];
        }
    }
    ResponseImage img(window, window);
    for (std::size_t i = 0; i < field.size(); ++i) img.pixels[i] = std::norm(field[i]);

    if (add_noise && puf.config().noise_std > 0.0) {
        // noise draws cover the full grid so a window sees the same values as the full image
        Rng rng(derive_seed(puf.config().seed, 0x6E6F697365ULL), noise_stream);
        const double sd = puf.config().noise_std;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c) {
                const double g = rng.normal();
                if (r < offset || r >= offset + window || c < offset || c >= offset + window)
                    continue;
                double& v = img.at(r - offset, c - offset);
                v = std::max(0.0, v * (1.0 + sd * g));
            }
    }
    for (double v : img.pixels)
        if (!std::isfinite(v)) throw std::runtime_error("respond: non-finite intensity");
    return img;
}

}  // namespace

ResponseImage respond(const TransmissionMatrix& puf, const Challenge& challenge, bool add_noise,
                      std::uint64_t noise_stream) {
    return evaluate_window(puf, challenge, 0, puf.side(), add_noise, noise_stream);
}

ResponseImage respond_cropped(const TransmissionMatrix& puf, const Challenge& challenge,
                              std::size_t window, bool add_noise, std::uint64_t noise_stream) {
    if (window == 0 || window > puf.side())
        throw std::invalid_argument("crop window " + std::to_string(window) +
                                    " exceeds image side " + std::to_string(puf.side()));
    return evaluate_window(puf, challenge, crop_offset(puf.side(), window), window, add_noise,
                           noise_stream);
}

ResponseImage crop_center(const ResponseImage& img, std::size_t window) {
    if (window > img.rows || window > img.cols)
        throw std::invalid_argument("crop window " + std::to_string(window) + " exceeds image " +
                                    std::to_string(img.rows) + "x" + std::to_string(img.cols));
    const std::size_t r0 = crop_offset(img.rows, window);
    const std::size_t c0 = crop_offset(img.cols, window);
    ResponseImage out(window, window);
    out.normalization = img.normalization;
    for (std::size_t r = 0; r < window; ++r)
        for (std::size_t c = 0; c < window; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
    return out;
}

}  // namespace puf_forge
