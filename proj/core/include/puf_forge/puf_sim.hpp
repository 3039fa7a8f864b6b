#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/image.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace puf_forge {

struct PufConfig {
    std::size_t grid_side = 5;        // blocks per row, odd >= 3
    std::size_t image_side = 512;     // full response is image_side^2 pixels
    std::size_t crop_side = 128;      // centered window used by the attacks
    double speckle_smoothing = 2.0;   // Gaussian sigma of the field, pixels
    int scale_factor = 1;             // 1 or 2; 2 widens the envelope and redraws patterns
    std::uint64_t seed = 0;
    double noise_std = 0.0;           // multiplicative intensity noise

    std::size_t blocks() const { return grid_side * grid_side; }

    /// Throws std::invalid_argument on the first violated constraint.
    void validate() const;

    friend bool operator==(const PufConfig&, const PufConfig&) = default;
};

void to_json(nlohmann::json& j, const PufConfig& config);
void from_json(const nlohmann::json& j, PufConfig& config);

using Field = std::complex<double>;

/// One complex p x p field pattern per challenge block. Immutable once built.
class TransmissionMatrix {
public:
    /// Takes ownership of explicit patterns (blocks() * image_side^2 values, block-major).
    TransmissionMatrix(PufConfig config, std::vector<Field> patterns);

    const PufConfig& config() const { return config_; }
    std::size_t blocks() const { return config_.blocks(); }
    std::size_t side() const { return config_.image_side; }
    std::span<const Field> pattern(std::size_t block) const;

    /// PUF with factor^2 times the blocks: every fine block carries its parent
    /// pattern divided by factor^2, so split_blocks(challenge) yields the same field.
    TransmissionMatrix refined(std::size_t factor) const;

private:
    struct Unchecked {};
    TransmissionMatrix(Unchecked, PufConfig config, std::vector<Field> patterns)
        : config_(std::move(config)), patterns_(std::move(patterns)) {}

    PufConfig config_;
    std::vector<Field> patterns_;
};

/// Samples iid complex Gaussians per block, smooths them with a Gaussian of
/// sigma speckle_smoothing and applies the circular Gaussian envelope.
TransmissionMatrix build_puf(const PufConfig& config);

/// Envelope standard deviation in pixels: image_side/6, or image_side/3 at scale factor 2.
double envelope_sigma(const PufConfig& config);

/// Full-resolution intensity |sum_j b_j T_j|^2. With add_noise each pixel is
/// scaled by (1 + g), g ~ N(0, noise_std^2) from stream `noise_stream`, and
/// clamped at 0.
ResponseImage respond(const TransmissionMatrix& puf, const Challenge& challenge,
                      bool add_noise = false, std::uint64_t noise_stream = 0);

/// Same intensities as crop_center(respond(...), window) without evaluating
/// the pixels outside the window.
ResponseImage respond_cropped(const TransmissionMatrix& puf, const Challenge& challenge,
                              std::size_t window, bool add_noise = false,
                              std::uint64_t noise_stream = 0);

/// Centered window; for odd (p - q) the extra pixel goes to the bottom/right.
ResponseImage crop_center(const ResponseImage& img, std::size_t window);

/// Offset of the first row/column kept by crop_center.
inline std::size_t crop_offset(std::size_t side, std::size_t window) { return (side - window) / 2; }

}  // namespace puf_forge
