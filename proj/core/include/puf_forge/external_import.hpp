#pragma once

#include "puf_forge/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace puf_forge {

/// Layout of an external CRP directory:
///   challenges/<index>.txt  '0'/'1' characters, whitespace ignored, n = l^2 bits
///   images/<index>.pgm      binary P5 grayscale, 8- or 16-bit
///   images/<index>.pfm      grayscale "Pf" float map
///   import.json             optional; keys mirror ImportFormat
/// Indices are decimal file stems; they must cover 0..count-1.
struct ImportFormat {
    std::optional<std::size_t> crop_side;    // default: min(128, image side)
    std::optional<std::size_t> train_count;  // default: 90% of count
    std::uint64_t split_seed = 0;
    std::vector<GaborPreset> presets{GaborPreset::G1, GaborPreset::G2};
    bool keep_full = false;
};

ImportFormat read_import_format(const std::filesystem::path& dir);

/// Every malformed file is listed, one per line, in what().
class ImportError : public std::runtime_error {
public:
    explicit ImportError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Images are scaled to unit max and center-cropped; the source bit depth
/// is recorded in the manifest. Bits are cached for the requested presets.
Dataset import_external(const std::filesystem::path& dir, const ImportFormat& format);
Dataset import_external(const std::filesystem::path& dir);

/// Writes the layout above with float (PFM) images so a re-import is lossless
/// up to unit-max scaling. Uses full responses when present.
void export_external(const Dataset& dataset, const std::filesystem::path& dir);

ResponseImage read_pgm(const std::filesystem::path& path, int* bit_depth = nullptr);
ResponseImage read_pfm(const std::filesystem::path& path);
void write_pgm(const ResponseImage& img, const std::filesystem::path& path, int bit_depth);
void write_pfm(const ResponseImage& img, const std::filesystem::path& path);

}  // namespace puf_forge
