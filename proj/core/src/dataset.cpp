#include "puf_forge/dataset.hpp"

#include "binary_io.hpp"
#include "puf_forge/parallel.hpp"
#include "puf_forge/rng.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

namespace {

constexpr std::array<char, 4> kImageMagic{'P', 'U', 'F', 'R'};
constexpr std::array<char, 4> kBitsMagic{'P', 'U', 'F', 'B'};

void write_header(std::ostream& out, const std::array<char, 4>& magic, std::uint32_t rows,
                  std::uint32_t cols, std::uint32_t count) {
    out.write(magic.data(), 4);
    detail::write_le(out, rows);
    detail::write_le(out, cols);
    detail::write_le(out, count);
}

std::array<std::uint32_t, 3> read_header(std::istream& in, const std::array<char, 4>& magic,
                                         const std::filesystem::path& path) {
    std::array<char, 4> got{};
    in.read(got.data(), 4);
    if (!in || got != magic) throw std::runtime_error(path.string() + ": bad magic");
    const auto rows = detail::read_le<std::uint32_t>(in);
    const auto cols = detail::read_le<std::uint32_t>(in);
    const auto count = detail::read_le<std::uint32_t>(in);
    return {rows, cols, count};
}

std::vector<const ResponseImage*> cropped_of(const Dataset& d) {
    std::vector<const ResponseImage*> out;
    for (const Crp& c : d.crps) out.push_back(&c.cropped);
    return out;
}

std::vector<Crp> pick(const Dataset& d, const std::vector<std::size_t>& idx) {
    std::vector<Crp> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(d.crps.at(i));
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const DatasetManifest& m) {
    std::vector<std::string> presets;
    for (GaborPreset p : m.presets) presets.emplace_back(to_string(p));
    j = nlohmann::json{{"format", "puf-forge-dataset/1"},
                       {"source", m.source},
                       {"puf", m.puf},
                       {"grid_side", m.puf.grid_side},
                       {"scheme", std::string(to_string(m.scheme))},
                       {"count", m.count},
                       {"challenge_seed", m.challenge_seed},
                       {"split_seed", m.split_seed},
                       {"train_count", m.train_count},
                       {"test_count", m.test_count},
                       {"presets", presets},
                       {"full_responses", m.full_responses},
                       {"noisy", m.noisy},
                       {"response_rows", m.response_rows},
                       {"response_cols", m.response_cols}};
    if (m.original_bit_depth) j["original_bit_depth"] = *m.original_bit_depth;
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
    m.source = j.value("source", std::string("simulated"));
    m.puf = j.at("puf").get<PufConfig>();
    m.scheme = parse_scheme(j.at("scheme").get<std::string>());
    m.count = j.at("count").get<std::size_t>();
    m.challenge_seed = j.value("challenge_seed", std::uint64_t{0});
    m.split_seed = j.value("split_seed", std::uint64_t{0});
    m.train_count = j.at("train_count").get<std::size_t>();
    m.test_count = j.at("test_count").get<std::size_t>();
    m.presets.clear();
    for (const auto& p : j.at("presets")) m.presets.push_back(parse_preset(p.get<std::string>()));
    m.full_responses = j.value("full_responses", false);
    m.noisy = j.value("noisy", false);
    m.response_rows = j.at("response_rows").get<std::size_t>();
    m.response_cols = j.at("response_cols").get<std::size_t>();
    if (j.contains("original_bit_depth")) m.original_bit_depth = j.at("original_bit_depth").get<int>();
}

std::vector<Crp> Dataset::train() const { return pick(*this, train_indices); }
std::vector<Crp> Dataset::test() const { return pick(*this, test_indices); }

DatasetSpec dataset_spec_from_seed(PufConfig puf, SchemeType scheme, std::size_t count, std::uint64_t seed) {
    DatasetSpec spec;
    puf.seed = seed;
    spec.puf = puf;
    spec.scheme = scheme;
    spec.count = count;
    spec.challenge_seed = derive_seed(seed, 1);
    spec.split_seed = derive_seed(seed, 2);
    return spec;
}

void assign_split(Dataset& dataset, std::size_t train_count, std::uint64_t seed) {
    const std::size_t count = dataset.crps.size();
    if (train_count > count)
        throw std::invalid_argument("train count " + std::to_string(train_count) + " exceeds " +
                                    std::to_string(count) + " CRPs");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, 0x53504C4954ULL);
    for (std::size_t i = count; i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    dataset.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    dataset.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    std::sort(dataset.train_indices.begin(), dataset.train_indices.end());
    std::sort(dataset.test_indices.begin(), dataset.test_indices.end());
    dataset.manifest.split_seed = seed;
    dataset.manifest.train_count = train_count;
    dataset.manifest.test_count = count - train_count;
}

Dataset generate_dataset(const DatasetSpec& spec) { return generate_dataset(spec, build_puf(spec.puf)); }

Dataset generate_dataset(const DatasetSpec& spec, const TransmissionMatrix& puf) {
    if (!(puf.config() == spec.puf))
        throw std::invalid_argument("generate_dataset: PUF does not match the dataset spec");
    const std::size_t train_count = spec.train_count.value_or((spec.count * 9 + 5) / 10);
    Dataset d;
    d.manifest.puf = spec.puf;
    d.manifest.scheme = spec.scheme;
    d.manifest.count = spec.count;
    d.manifest.challenge_seed = spec.challenge_seed;
    d.manifest.full_responses = spec.full_responses;
    d.manifest.noisy = spec.add_noise && spec.puf.noise_std > 0.0;
    d.manifest.response_rows = spec.puf.crop_side;
    d.manifest.response_cols = spec.puf.crop_side;

    const auto challenges = generate(spec.puf.grid_side, spec.scheme, spec.count, spec.challenge_seed);
    d.crps.resize(challenges.size());
    parallel_for(challenges.size(), [&](std::size_t i) {
        Crp& crp = d.crps[i];
        crp.challenge = challenges[i];
        if (spec.full_responses) {
            crp.full = respond(puf, challenges[i], spec.add_noise, i);
            crp.cropped = crop_center(*crp.full, spec.puf.crop_side);
        } else {
            crp.cropped = respond_cropped(puf, challenges[i], spec.puf.crop_side, spec.add_noise, i);
        }
    });
    assign_split(d, train_count, spec.split_seed);
    return d;
}

void cache_bits(Dataset& dataset) {
    for (GaborPreset preset : dataset.manifest.presets) {
        const GaborKernel kernel = make_kernel(preset);
        parallel_for(dataset.crps.size(), [&](std::size_t i) {
            // map insertion is per-CRP, so distinct indices never share a container
            dataset.crps[i].bits[preset] = gabor_binarize(dataset.crps[i].cropped, kernel);
        });
    }
}

void quantize_to_storage(Dataset& dataset) {
    auto round = [](ResponseImage& img) {
        for (double& v : img.pixels) v = static_cast<double>(static_cast<float>(v));
    };
    for (Crp& c : dataset.crps) {
        round(c.cropped);
        if (c.full) round(*c.full);
    }
    cache_bits(dataset);
}

void write_image_block(const std::filesystem::path& path, const std::vector<const ResponseImage*>& images) {
    auto out = detail::open_out(path);
    const std::uint32_t rows = images.empty() ? 0 : static_cast<std::uint32_t>(images.front()->rows);
    const std::uint32_t cols = images.empty() ? 0 : static_cast<std::uint32_t>(images.front()->cols);
    write_header(out, kImageMagic, rows, cols, static_cast<std::uint32_t>(images.size()));
    for (const ResponseImage* img : images) {
        if (img->rows != rows || img->cols != cols)
            throw std::invalid_argument("write_image_block: images differ in size");
        for (double v : img->pixels) detail::write_le(out, static_cast<float>(v));
    }
}

std::vector<ResponseImage> read_image_block(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto [rows, cols, count] = read_header(in, kImageMagic, path);
    std::vector<ResponseImage> images;
    images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ResponseImage img(rows, cols);
        for (double& v : img.pixels) v = static_cast<double>(detail::read_le<float>(in));
        images.push_back(std::move(img));
    }
    return images;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = dataset.manifest;
    manifest["split"] = {{"train", dataset.train_indices}, {"test", dataset.test_indices}};
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << '\n';
    }
    {
        auto out = detail::open_out(dir / "challenges.bin");
        for (const Crp& c : dataset.crps) {
            const auto packed = pack_bits(c.challenge.bits());
            out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
        }
    }
    write_image_block(dir / "responses.f32", cropped_of(dataset));
    if (dataset.manifest.full_responses) {
        std::vector<const ResponseImage*> full;
        for (const Crp& c : dataset.crps) {
            if (!c.full) throw std::invalid_argument("save_dataset: manifest promises full responses");
            full.push_back(&*c.full);
        }
        write_image_block(dir / "full_responses.f32", full);
    }
    for (GaborPreset preset : dataset.manifest.presets) {
        if (dataset.crps.empty() || !dataset.crps.front().bits.contains(preset)) continue;
        auto out = detail::open_out(dir / ("bits_" + std::string(to_string(preset)) + ".bin"));
        write_header(out, kBitsMagic, static_cast<std::uint32_t>(dataset.manifest.response_rows),
                     static_cast<std::uint32_t>(dataset.manifest.response_cols),
                     static_cast<std::uint32_t>(dataset.crps.size()));
        for (const Crp& c : dataset.crps) {
            const auto packed = pack_bits(c.bits.at(preset).bits);
            out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
        }
    }
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    Dataset d;
    d.manifest = j.get<DatasetManifest>();
    d.train_indices = j.at("split").at("train").get<std::vector<std::size_t>>();
    d.test_indices = j.at("split").at("test").get<std::vector<std::size_t>>();

    const std::size_t n = d.manifest.puf.grid_side * d.manifest.puf.grid_side;
    const std::size_t row_bytes = (n + 7) / 8;
    auto ch = detail::open_in(dir / "challenges.bin");
    std::vector<std::uint8_t> packed(row_bytes);
    d.crps.resize(d.manifest.count);
    for (std::size_t i = 0; i < d.manifest.count; ++i) {
        ch.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(row_bytes));
        if (!ch) throw std::runtime_error("challenges.bin: truncated at challenge " + std::to_string(i));
        d.crps[i].challenge = Challenge(d.manifest.puf.grid_side, unpack_bits(packed, n));
    }

    auto images = read_image_block(dir / "responses.f32");
    if (images.size() != d.manifest.count)
        throw std::runtime_error("responses.f32 holds " + std::to_string(images.size()) + " images, manifest says " +
                                 std::to_string(d.manifest.count));
    for (std::size_t i = 0; i < images.size(); ++i) d.crps[i].cropped = std::move(images[i]);

    if (d.manifest.full_responses) {
        auto full = read_image_block(dir / "full_responses.f32");
        if (full.size() != d.manifest.count) throw std::runtime_error("full_responses.f32: count mismatch");
        for (std::size_t i = 0; i < full.size(); ++i) d.crps[i].full = std::move(full[i]);
    }

    for (GaborPreset preset : d.manifest.presets) {
        const auto path = dir / ("bits_" + std::string(to_string(preset)) + ".bin");
        if (!std::filesystem::exists(path)) continue;
        auto bin = detail::open_in(path);
        const auto [rows, cols, count] = read_header(bin, kBitsMagic, path);
        if (count != d.manifest.count) throw std::runtime_error(path.string() + ": count mismatch");
        const std::size_t bits = std::size_t{rows} * cols;
        std::vector<std::uint8_t> buf((bits + 7) / 8);
        for (std::size_t i = 0; i < count; ++i) {
            bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
            if (!bin) throw std::runtime_error(path.string() + ": truncated");
            d.crps[i].bits[preset] = BitResponse{rows, cols, unpack_bits(buf, bits)};
        }
    }

    std::vector<std::size_t> all = d.train_indices;
    all.insert(all.end(), d.test_indices.begin(), d.test_indices.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] != i || all.size() != d.manifest.count)
            throw std::runtime_error("manifest split is not a partition of the CRPs");
    return d;
}

}  // namespace puf_forge
