#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/gabor.hpp"
#include "puf_forge/image.hpp"

#include <map>
#include <optional>

namespace puf_forge {

/// Challenge-response pair. `cropped` is what the attacks consume; `full`
/// is kept only when the dataset was generated with full responses.
struct Crp {
    Challenge challenge;
    std::optional<ResponseImage> full;
    ResponseImage cropped;
    std::map<GaborPreset, BitResponse> bits;
};

/// Bits of the cropped response, taken from the cache when present.
BitResponse crp_bits(const Crp& crp, GaborPreset preset);

}  // namespace puf_forge
