#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/crp.hpp"
#include "puf_forge/gabor.hpp"
#include "puf_forge/puf_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace puf_forge {

struct DatasetManifest {
    PufConfig puf;
    SchemeType scheme = SchemeType::A;
    std::size_t count = 0;
    std::uint64_t challenge_seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::vector<GaborPreset> presets{GaborPreset::G1, GaborPreset::G2};
    bool full_responses = false;
    bool noisy = false;
    std::size_t response_rows = 0;
    std::size_t response_cols = 0;
    std::string source = "simulated";  // or "imported"
    std::optional<int> original_bit_depth;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

struct Dataset {
    DatasetManifest manifest;
    std::vector<Crp> crps;
    std::vector<std::size_t> train_indices;  // sorted
    std::vector<std::size_t> test_indices;   // sorted

    std::vector<Crp> train() const;
    std::vector<Crp> test() const;
};

struct DatasetSpec {
    PufConfig puf;
    SchemeType scheme = SchemeType::A;
    std::size_t count = 1000;
    std::uint64_t challenge_seed = 1;
    std::uint64_t split_seed = 2;
    std::optional<std::size_t> train_count;  // default: 90% of count
    bool full_responses = false;
    bool add_noise = false;
};

/// Spec derived from one user seed: PUF seed = seed, challenge and split
/// seeds are separate streams of it.
DatasetSpec dataset_spec_from_seed(PufConfig puf, SchemeType scheme, std::size_t count, std::uint64_t seed);

/// Seeded disjoint split; the first `train_count` of a shuffled order train.
void assign_split(Dataset& dataset, std::size_t train_count, std::uint64_t seed);

/// Simulates every CRP. Bits are not cached; see cache_bits.
Dataset generate_dataset(const DatasetSpec& spec);
Dataset generate_dataset(const DatasetSpec& spec, const TransmissionMatrix& puf);

/// Fills crp.bits for every manifest preset from the current cropped images.
void cache_bits(Dataset& dataset);

/// Rounds every image to float32, the on-disk precision, then re-caches bits.
/// A dataset passed through this equals the one save_dataset/load_dataset returns.
void quantize_to_storage(Dataset& dataset);

/// Directory layout: manifest.json, challenges.bin, responses.f32,
/// full_responses.f32 (optional), bits_<preset>.bin per cached preset.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// 16-byte header (magic "PUFR", rows, cols, count as uint32 LE) then float32 LE pixels.
void write_image_block(const std::filesystem::path& path, const std::vector<const ResponseImage*>& images);
std::vector<ResponseImage> read_image_block(const std::filesystem::path& path);

}  // namespace puf_forge
