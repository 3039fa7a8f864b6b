#pragma once

#include <cstdint>
#include <random>

namespace puf_forge {

/// Mixes a base seed with a stream index into an independent 64-bit seed.
/// Streams are addressed by counter, so draws for item `i` never depend on
/// how many items were generated before it.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Thin wrapper over std::mt19937_64 with portable conversions. The engine
/// output is fixed by the standard; the conversions below are ours so the
/// streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform();

    /// Standard normal (Box-Muller, one value per call; the sine branch is cached).
    double normal();

    /// Uniform integer on [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    bool coin() { return (next() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace puf_forge
