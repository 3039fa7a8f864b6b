#include "puf_forge/challenge.hpp"

#include "puf_forge/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace puf_forge {

namespace {

std::size_t exact_sqrt(std::size_t n) {
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (side * side > n) --side;
    while ((side + 1) * (side + 1) <= n) ++side;
    return side;
}

void check_grid(std::size_t grid_side) {
    if (grid_side < 3 || grid_side % 2 == 0)
        throw std::invalid_argument("grid side must be odd and >= 3, got " +
                                    std::to_string(grid_side));
}

}  // namespace

Challenge::Challenge(std::size_t grid_side, std::vector<std::uint8_t> bits)
    : grid_side_(grid_side), bits_(std::move(bits)) {
    if (grid_side_ == 0 || bits_.size() != grid_side_ * grid_side_)
        throw std::invalid_argument("challenge length " + std::to_string(bits_.size()) +
                                    " does not match grid side " + std::to_string(grid_side_));
    for (std::uint8_t b : bits_)
        if (b > 1) throw std::invalid_argument("challenge bits must be 0 or 1");
}

Challenge Challenge::zeros(std::size_t grid_side) {
    return Challenge(grid_side, std::vector<std::uint8_t>(grid_side * grid_side, 0));
}

Challenge Challenge::ones(std::size_t grid_side) {
    return Challenge(grid_side, std::vector<std::uint8_t>(grid_side * grid_side, 1));
}

Challenge Challenge::unit(std::size_t grid_side, std::size_t index) {
    Challenge c = zeros(grid_side);
    c.set(index, true);
    return c;
}

Challenge Challenge::from_bits(std::vector<std::uint8_t> bits) {
    const std::size_t side = exact_sqrt(bits.size());
    if (side * side != bits.size())
        throw std::invalid_argument("challenge length " + std::to_string(bits.size()) +
                                    " is not a perfect square");
    return Challenge(side, std::move(bits));
}

std::size_t Challenge::popcount() const {
    return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

std::string Challenge::to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (std::uint8_t b : bits_) s.push_back(b ? '1' : '0');
    return s;
}

std::string_view to_string(SchemeType scheme) {
    switch (scheme) {
        case SchemeType::A: return "A";
        case SchemeType::B: return "B";
        case SchemeType::C: return "C";
        case SchemeType::D: return "D";
    }
    return "?";
}

SchemeType parse_scheme(std::string_view text) {
    if (text == "A" || text == "a") return SchemeType::A;
    if (text == "B" || text == "b") return SchemeType::B;
    if (text == "C" || text == "c") return SchemeType::C;
    if (text == "D" || text == "d") return SchemeType::D;
    throw std::invalid_argument("unknown challenge scheme '" + std::string(text) + "'");
}

std::size_t activation_cap(SchemeType scheme, std::size_t n) {
    switch (scheme) {
        case SchemeType::C: return n / 2;
        case SchemeType::D: return 2 * n / 3;
        default: return n;
    }
}

bool is_eligible(SchemeType scheme, std::size_t row, std::size_t col) {
    return scheme != SchemeType::B || (row + col) % 2 == 0;
}

Challenge generate_one(std::size_t grid_side, SchemeType scheme, std::uint64_t rng_seed,
                       std::uint64_t index) {
    const std::size_t n = grid_side * grid_side;
    Rng rng(rng_seed, index);
    std::vector<std::uint8_t> bits(n, 0);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        const bool on = rng.coin();
        if (on && is_eligible(scheme, i / grid_side, i % grid_side)) {
            bits[i] = 1;
            active.push_back(i);
        }
    }
    // uniformly random deactivation down to the cap
    const std::size_t cap = activation_cap(scheme, n);
    while (active.size() > cap) {
        const auto pick = static_cast<std::size_t>(rng.below(active.size()));
        bits[active[pick]] = 0;
        active[pick] = active.back();
        active.pop_back();
    }
    return Challenge(grid_side, std::move(bits));
}

std::vector<Challenge> generate(std::size_t grid_side, SchemeType scheme, std::size_t count,
                                std::uint64_t rng_seed) {
    check_grid(grid_side);
    if (count == 0) throw std::invalid_argument("challenge count must be >= 1");
    std::vector<Challenge> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(generate_one(grid_side, scheme, rng_seed, i));
    return out;
}

std::map<std::size_t, std::size_t> popcount_histogram(std::span<const Challenge> challenges) {
    if (challenges.empty()) throw std::invalid_argument("popcount_histogram: no challenges");
    std::map<std::size_t, std::size_t> hist;
    const std::size_t n = challenges.front().size();
    for (std::size_t i = 0; i < challenges.size(); ++i) {
        if (challenges[i].size() != n)
            throw std::invalid_argument("popcount_histogram: challenge " + std::to_string(i) +
                                        " has length " + std::to_string(challenges[i].size()) +
                                        ", expected " + std::to_string(n));
        ++hist[challenges[i].popcount()];
    }
    return hist;
}

Challenge split_blocks(const Challenge& challenge, std::size_t factor) {
    if (factor == 0) throw std::invalid_argument("split_blocks: factor must be >= 1");
    const std::size_t side = challenge.grid_side() * factor;
    std::vector<std::uint8_t> bits(side * side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c)
            bits[r * side + c] = challenge.at(r / factor, c / factor);
    return Challenge(side, std::move(bits));
}

std::vector<double> quadratic_expand(std::span<const std::uint8_t> bits) {
    const std::size_t n = bits.size();
    std::vector<double> features;
    features.reserve(quadratic_feature_count(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j; k < n; ++k)
            features.push_back(static_cast<double>(bits[j] & bits[k]));
    return features;
}

std::vector<double> quadratic_expand(const Challenge& challenge) {
    return quadratic_expand(challenge.bits());
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return packed;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t count) {
    if (packed.size() * 8 < count)
        throw std::invalid_argument("unpack_bits: " + std::to_string(packed.size()) +
                                    " bytes cannot hold " + std::to_string(count) + " bits");
    std::vector<std::uint8_t> bits(count);
    for (std::size_t i = 0; i < count; ++i) bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return bits;
}

}  // namespace puf_forge
