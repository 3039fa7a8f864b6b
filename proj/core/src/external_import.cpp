#include "puf_forge/external_import.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace puf_forge {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out = "external import failed:";
    for (const auto& l : lines) out += "\n  " + l;
    return out;
}

std::string next_token(std::istream& in) {
    std::string token;
    char ch;
    while (in.get(ch)) {
        if (ch == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(ch);
    }
    return token;
}

std::size_t parse_size(const std::string& token, const std::filesystem::path& path) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw std::runtime_error(path.string() + ": bad header field '" + token + "'");
    return value;
}

std::optional<std::size_t> stem_index(const std::filesystem::path& p) {
    const std::string stem = p.stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return std::nullopt;
    return parse_size(stem, p);
}

Challenge read_challenge_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::vector<std::uint8_t> bits;
    char ch;
    while (in.get(ch)) {
        if (ch == '0' || ch == '1') bits.push_back(static_cast<std::uint8_t>(ch - '0'));
        else if (!std::isspace(static_cast<unsigned char>(ch)) && ch != ',')
            throw std::runtime_error(path.string() + ": unexpected character '" + std::string(1, ch) + "'");
    }
    try {
        return Challenge::from_bits(std::move(bits));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace

ImportError::ImportError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

ResponseImage read_pgm(const std::filesystem::path& path, int* bit_depth) {
    auto in = detail::open_in(path);
    if (next_token(in) != "P5") throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
    const std::size_t width = parse_size(next_token(in), path);
    const std::size_t height = parse_size(next_token(in), path);
    const std::size_t maxval = parse_size(next_token(in), path);
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
        throw std::runtime_error(path.string() + ": invalid PGM header");
    const bool wide = maxval > 255;
    if (bit_depth) *bit_depth = wide ? 16 : 8;
    ResponseImage img(height, width);
    for (double& v : img.pixels) {
        unsigned value = 0;
        unsigned char bytes[2] = {0, 0};
        in.read(reinterpret_cast<char*>(bytes), wide ? 2 : 1);
        if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
        value = wide ? (static_cast<unsigned>(bytes[0]) << 8) | bytes[1] : bytes[0];
        v = static_cast<double>(value);
    }
    return img;
}

ResponseImage read_pfm(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    if (next_token(in) != "Pf") throw std::runtime_error(path.string() + ": not a grayscale PFM (Pf)");
    const std::size_t width = parse_size(next_token(in), path);
    const std::size_t height = parse_size(next_token(in), path);
    const std::string scale_token = next_token(in);
    double scale = 0.0;
    try {
        scale = std::stod(scale_token);
    } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ": bad PFM scale '" + scale_token + "'");
    }
    if (width == 0 || height == 0 || scale == 0.0) throw std::runtime_error(path.string() + ": invalid PFM header");
    const bool little = scale < 0.0;
    ResponseImage img(height, width);
    // PFM stores the bottom row first
    for (std::size_t r = height; r-- > 0;) {
        for (std::size_t c = 0; c < width; ++c) {
            unsigned char bytes[4];
            in.read(reinterpret_cast<char*>(bytes), 4);
            if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
            if (little != (std::endian::native == std::endian::little)) std::reverse(bytes, bytes + 4);
            float f;
            std::memcpy(&f, bytes, 4);
            if (!std::isfinite(f) || f < 0.0f) throw std::runtime_error(path.string() + ": invalid intensity");
            img.at(r, c) = static_cast<double>(f);
        }
    }
    return img;
}

void write_pgm(const ResponseImage& img, const std::filesystem::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("PGM bit depth must be 8 or 16");
    auto out = detail::open_out(path);
    const unsigned maxval = bit_depth == 8 ? 255u : 65535u;
    out << "P5\n" << img.cols << ' ' << img.rows << '\n' << maxval << '\n';
    const double peak = img.max_value();
    for (double v : img.pixels) {
        const auto q = static_cast<unsigned>(std::lround(peak > 0 ? std::clamp(v / peak, 0.0, 1.0) * maxval : 0.0));
        if (bit_depth == 16) out.put(static_cast<char>(q >> 8));
        out.put(static_cast<char>(q & 0xFF));
    }
}

void write_pfm(const ResponseImage& img, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "Pf\n" << img.cols << ' ' << img.rows << "\n-1.0\n";
    for (std::size_t r = img.rows; r-- > 0;)
        for (std::size_t c = 0; c < img.cols; ++c) detail::write_le(out, static_cast<float>(img.at(r, c)));
}

ImportFormat read_import_format(const std::filesystem::path& dir) {
    ImportFormat f;
    const auto path = dir / "import.json";
    if (!std::filesystem::exists(path)) return f;
    std::ifstream in(path);
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.contains("crop_side")) f.crop_side = j.at("crop_side").get<std::size_t>();
    if (j.contains("train_count")) f.train_count = j.at("train_count").get<std::size_t>();
    f.split_seed = j.value("split_seed", std::uint64_t{0});
    f.keep_full = j.value("keep_full", false);
    if (j.contains("presets")) {
        f.presets.clear();
        for (const auto& p : j.at("presets")) f.presets.push_back(parse_preset(p.get<std::string>()));
    }
    return f;
}

Dataset import_external(const std::filesystem::path& dir) { return import_external(dir, read_import_format(dir)); }

Dataset import_external(const std::filesystem::path& dir, const ImportFormat& format) {
    std::vector<std::string> problems;
    std::map<std::size_t, std::filesystem::path> challenge_files, image_files;
    auto scan = [&](const std::filesystem::path& sub, auto& files, std::initializer_list<const char*> exts) {
        if (!std::filesystem::is_directory(sub)) {
            problems.push_back(sub.string() + ": missing directory");
            return;
        }
        for (const auto& entry : std::filesystem::directory_iterator(sub)) {
            const auto ext = entry.path().extension().string();
            if (std::none_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; })) continue;
            if (auto idx = stem_index(entry.path())) {
                if (!files.emplace(*idx, entry.path()).second)
                    problems.push_back(entry.path().string() + ": duplicate index " + std::to_string(*idx));
            } else {
                problems.push_back(entry.path().string() + ": file name is not a decimal index");
            }
        }
    };
    scan(dir / "challenges", challenge_files, {".txt"});
    scan(dir / "images", image_files, {".pgm", ".pfm"});
    if (!problems.empty()) throw ImportError(problems);

    const std::size_t count = std::max(challenge_files.size(), image_files.size());
    for (std::size_t i = 0; i < count; ++i) {
        if (!challenge_files.contains(i)) problems.push_back("index " + std::to_string(i) + ": challenge file missing");
        if (!image_files.contains(i)) problems.push_back("index " + std::to_string(i) + ": image file missing");
    }
    if (count == 0) problems.push_back(dir.string() + ": no CRPs found");
    if (!problems.empty()) throw ImportError(problems);

    Dataset d;
    d.crps.resize(count);
    std::optional<std::size_t> grid, rows, cols;
    int depth = 0;
    for (std::size_t i = 0; i < count; ++i) {
        try {
            Challenge ch = read_challenge_text(challenge_files.at(i));
            if (grid && ch.grid_side() != *grid)
                throw std::runtime_error(challenge_files.at(i).string() + ": " + std::to_string(ch.size()) +
                                         " bits, expected " + std::to_string(*grid * *grid));
            grid = ch.grid_side();
            d.crps[i].challenge = std::move(ch);
        } catch (const std::exception& e) {
            problems.emplace_back(e.what());
        }
        try {
            const auto& path = image_files.at(i);
            int file_depth = 32;
            ResponseImage img = path.extension() == ".pfm" ? read_pfm(path) : read_pgm(path, &file_depth);
            if (rows && (img.rows != *rows || img.cols != *cols))
                throw std::runtime_error(path.string() + ": image is " + std::to_string(img.rows) + "x" +
                                         std::to_string(img.cols) + ", expected " + std::to_string(*rows) + "x" +
                                         std::to_string(*cols));
            rows = img.rows;
            cols = img.cols;
            depth = std::max(depth, file_depth);
            d.crps[i].full = unit_max(img);
        } catch (const std::exception& e) {
            problems.emplace_back(e.what());
        }
    }
    if (!problems.empty()) throw ImportError(problems);

    const std::size_t side = std::min(*rows, *cols);
    const std::size_t crop = format.crop_side.value_or(std::min<std::size_t>(128, side));
    if (crop == 0 || crop > side)
        throw ImportError({"crop side " + std::to_string(crop) + " exceeds image side " + std::to_string(side)});
    for (Crp& c : d.crps) {
        c.cropped = crop_center(*c.full, crop);
        c.cropped.normalization = Normalization::unit_max;
        if (!format.keep_full || *rows != *cols) c.full.reset();
    }

    DatasetManifest& m = d.manifest;
    m.source = "imported";
    m.puf.grid_side = *grid;
    m.puf.image_side = side;
    m.puf.crop_side = crop;
    m.puf.seed = 0;
    m.count = count;
    m.presets = format.presets;
    m.full_responses = format.keep_full && *rows == *cols;
    m.response_rows = crop;
    m.response_cols = crop;
    m.original_bit_depth = depth;
    assign_split(d, format.train_count.value_or((count * 9 + 5) / 10), format.split_seed);
    cache_bits(d);
    return d;
}

void export_external(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "challenges");
    std::filesystem::create_directories(dir / "images");
    for (std::size_t i = 0; i < dataset.crps.size(); ++i) {
        const Crp& c = dataset.crps[i];
        std::ostringstream name;
        name.width(6);
        name.fill('0');
        name << i;
        std::ofstream txt(dir / "challenges" / (name.str() + ".txt"));
        if (!txt) throw std::runtime_error("cannot write challenge " + std::to_string(i));
        for (std::size_t r = 0; r < c.challenge.grid_side(); ++r) {
            for (std::size_t col = 0; col < c.challenge.grid_side(); ++col) txt << int{c.challenge.at(r, col)};
            txt << '\n';
        }
        write_pfm(c.full ? *c.full : c.cropped, dir / "images" / (name.str() + ".pfm"));
    }
    nlohmann::json j{{"crop_side", dataset.manifest.response_rows},
                     {"train_count", dataset.manifest.train_count},
                     {"split_seed", dataset.manifest.split_seed}};
    std::vector<std::string> presets;
    for (GaborPreset p : dataset.manifest.presets) presets.emplace_back(to_string(p));
    j["presets"] = presets;
    std::ofstream out(dir / "import.json");
    out << j.dump(2) << '\n';
}

}  // namespace puf_forge
