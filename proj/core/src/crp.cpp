#include "puf_forge/crp.hpp"

namespace puf_forge {

BitResponse crp_bits(const Crp& crp, GaborPreset preset) {
    if (auto it = crp.bits.find(preset); it != crp.bits.end()) return it->second;
    return gabor_binarize(crp.cropped, make_kernel(preset));
}

}  // namespace puf_forge
