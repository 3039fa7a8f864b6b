#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/crp.hpp"
#include "puf_forge/image.hpp"
#include "puf_forge/puf_sim.hpp"
#include "puf_forge/rng.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace puf_forge::testing {

inline PufConfig small_puf(std::size_t l = 3, std::uint64_t seed = 7, std::size_t image = 32, std::size_t crop = 16) {
    PufConfig c;
    c.grid_side = l;
    c.image_side = image;
    c.crop_side = crop;
    c.seed = seed;
    return c;
}

inline ResponseImage random_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    ResponseImage img(rows, cols);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

inline std::vector<Crp> simulate(const TransmissionMatrix& puf, std::span<const Challenge> challenges) {
    std::vector<Crp> out;
    for (const Challenge& ch : challenges) {
        Crp crp;
        crp.challenge = ch;
        crp.cropped = respond_cropped(puf, ch, puf.config().crop_side);
        out.push_back(std::move(crp));
    }
    return out;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("puf_forge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

}  // namespace puf_forge::testing
