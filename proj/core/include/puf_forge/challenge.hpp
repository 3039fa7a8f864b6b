#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace puf_forge {

/// Binary activation mask over an l x l block grid, flattened row-major.
class Challenge {
public:
    Challenge() = default;
    /// Throws std::invalid_argument unless bits.size() == grid_side^2 and every entry is 0/1.
    Challenge(std::size_t grid_side, std::vector<std::uint8_t> bits);

    static Challenge zeros(std::size_t grid_side);
    static Challenge ones(std::size_t grid_side);
    /// Single active block at flat index `index`.
    static Challenge unit(std::size_t grid_side, std::size_t index);
    /// Infers the grid side from the length, which must be a perfect square.
    static Challenge from_bits(std::vector<std::uint8_t> bits);

    std::size_t grid_side() const { return grid_side_; }
    std::size_t size() const { return bits_.size(); }
    std::span<const std::uint8_t> bits() const { return bits_; }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::uint8_t at(std::size_t row, std::size_t col) const { return bits_[row * grid_side_ + col]; }
    void set(std::size_t i, bool value) { bits_.at(i) = value ? 1 : 0; }

    std::size_t popcount() const;
    std::string to_string() const;

    friend bool operator==(const Challenge&, const Challenge&) = default;

private:
    std::size_t grid_side_ = 0;
    std::vector<std::uint8_t> bits_;
};

enum class SchemeType { A, B, C, D };

std::string_view to_string(SchemeType scheme);
SchemeType parse_scheme(std::string_view text);

/// Upper bound on active bits: n for A and B, floor(n/2) for C, floor(2n/3) for D.
std::size_t activation_cap(SchemeType scheme, std::size_t n);

/// True when a cell may be active under the scheme; type B uses the
/// checkerboard with (0,0) eligible.
bool is_eligible(SchemeType scheme, std::size_t row, std::size_t col);

/// Draws `count` challenges. Challenge i uses its own stream derived from
/// (rng_seed, i), so the result does not depend on generation order.
std::vector<Challenge> generate(std::size_t grid_side, SchemeType scheme, std::size_t count,
                                std::uint64_t rng_seed);

/// Draw a single challenge from stream `index` (the i-th element of generate()).
Challenge generate_one(std::size_t grid_side, SchemeType scheme, std::uint64_t rng_seed,
                       std::uint64_t index);

/// Exact count of challenges per number of active bits.
std::map<std::size_t, std::size_t> popcount_histogram(std::span<const Challenge> challenges);

/// Replaces every block by a factor x factor group of identical bits.
Challenge split_blocks(const Challenge& challenge, std::size_t factor);

/// Products b_j * b_k for all j <= k, j outer, k inner. Length n(n+1)/2.
std::vector<double> quadratic_expand(const Challenge& challenge);
std::vector<double> quadratic_expand(std::span<const std::uint8_t> bits);

inline std::size_t quadratic_feature_count(std::size_t n) { return n * (n + 1) / 2; }

/// Packs bits LSB-first into ceil(n/8) bytes.
std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t count);

}  // namespace puf_forge
