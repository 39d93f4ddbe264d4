#pragma once

// Named-parameter archives. Layout (all integers little-endian):
//
//   "XCGANCKP"                     8-byte magic
//   u32 version                    currently 1
//   u32 manifest_size, bytes       JSON manifest (architecture, direction, ...)
//   u32 tensor_count
//   per tensor: u32 name_size, name bytes, u32 rank, u32 dims[rank],
//               u64 value_count, float32 values[value_count]
//   u64 FNV-1a hash of every preceding byte
//
// Loading validates size and hash before anything is parsed, so a truncated
// or corrupt file never yields partially filled parameters.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"
#include "crossgan/flow_io.hpp"
#include "crossgan/gan_training.hpp"
#include "crossgan/nn/params.hpp"

namespace crossgan {

inline constexpr char kCheckpointMagic[8] = {'X', 'C', 'G', 'A', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Archive {
    nlohmann::json manifest;
    nn::ParamSet<float> tensors;
};

namespace ckpt_detail {

class Writer {
public:
    template <typename V>
    void pod(const V& v) {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(V));
    }
    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    std::vector<unsigned char> bytes;
};

class Reader {
public:
    Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}
    template <typename V>
    V pod() {
        V v{};
        need(sizeof(V));
        std::memcpy(&v, data_ + pos_, sizeof(V));
        pos_ += sizeof(V);
        return v;
    }
    std::string string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    void floats(float* out, std::size_t n) {
        need(n * sizeof(float));
        std::memcpy(out, data_ + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }
    bool done() const { return pos_ == size_; }

private:
    void need(std::size_t n) const {
        if (n > size_ - pos_) throw FormatError("checkpoint payload truncated");
    }
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::vector<unsigned char> serialize_archive(const Archive& archive) {
    ckpt_detail::Writer w;
    w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.pod(kCheckpointVersion);
    const std::string manifest = archive.manifest.dump();
    w.pod(static_cast<std::uint32_t>(manifest.size()));
    w.raw(manifest.data(), manifest.size());
    w.pod(static_cast<std::uint32_t>(archive.tensors.size()));
    for (const auto& p : archive.tensors) {
        w.pod(static_cast<std::uint32_t>(p.name.size()));
        w.raw(p.name.data(), p.name.size());
        w.pod(static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) w.pod(static_cast<std::uint32_t>(d));
        w.pod(static_cast<std::uint64_t>(p.values.size()));
        w.raw(p.values.data(), p.values.size() * sizeof(float));
    }
    w.pod(fnv1a64(w.bytes.data(), w.bytes.size()));
    return std::move(w.bytes);
}

inline Archive deserialize_archive(const std::vector<unsigned char>& bytes) {
    constexpr std::size_t kTrailer = sizeof(std::uint64_t);
    if (bytes.size() < sizeof(kCheckpointMagic) + kTrailer ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw FormatError("not a checkpoint file (bad magic or truncated)");
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - kTrailer, kTrailer);
    if (stored != fnv1a64(bytes.data(), bytes.size() - kTrailer))
        throw FormatError("checkpoint checksum mismatch (truncated or corrupt file)");

    ckpt_detail::Reader r(bytes.data() + sizeof(kCheckpointMagic), bytes.size() - sizeof(kCheckpointMagic) - kTrailer);
    if (const auto version = r.pod<std::uint32_t>(); version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Archive a;
    try {
        a.manifest = nlohmann::json::parse(r.string(r.pod<std::uint32_t>()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }
    const auto count = r.pod<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = r.string(r.pod<std::uint32_t>());
        std::vector<int> shape(r.pod<std::uint32_t>());
        for (auto& d : shape) d = static_cast<int>(r.pod<std::uint32_t>());
        const auto n = r.pod<std::uint64_t>();
        const auto idx = a.tensors.add(std::move(name), shape);
        if (a.tensors[idx].values.size() != n) throw FormatError("checkpoint tensor size disagrees with its shape");
        r.floats(a.tensors[idx].values.data(), n);
    }
    if (!r.done()) throw FormatError("trailing bytes in checkpoint");
    return a;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw FormatError("failed writing " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline nlohmann::json generator_manifest(const GeneratorConfig& c) {
    return {{"resolution", c.resolution}, {"stages", c.stage_count()}, {"base_filters", c.base_filters},
            {"dropout_rate", c.dropout_rate}, {"dropout_stages", c.dropout_stages}, {"channels", c.channels}};
}

inline nlohmann::json discriminator_manifest(const DiscriminatorConfig& c) {
    return {{"resolution", c.resolution}, {"base_filters", c.base_filters},
            {"downsampling_stages", c.downsampling_stages}, {"image_channels", c.image_channels},
            {"grid_size", c.grid_size()}};
}

namespace ckpt_detail {

template <typename Net>
void copy_prefixed(nn::ParamSet<float>& dst, const Net& net, const std::string& prefix) {
    for (const auto& p : net.params()) {
        const auto idx = dst.add(prefix + p.name, p.shape);
        dst[idx].values = p.values;
    }
}

template <typename Net>
void fill_prefixed(Net& net, const nn::ParamSet<float>& src, const std::string& prefix) {
    for (auto& p : net.params()) {
        const auto* s = src.find(prefix + p.name);
        if (!s) throw FormatError("checkpoint is missing tensor " + prefix + p.name);
        if (s->shape != p.shape) throw ConfigError("checkpoint tensor " + prefix + p.name + " has an incompatible shape");
        p.values = s->values;
    }
}

template <typename V>
V manifest_value(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("checkpoint manifest lacks '") + key + "'");
    return j.at(key).get<V>();
}

}  // namespace ckpt_detail

inline Archive task_archive(const TrainedTask& task) {
    Archive a;
    a.manifest = {{"format", "crossgan-task"},
                  {"direction", to_string(task.direction)},
                  {"generator", generator_manifest(task.generator.config())},
                  {"discriminator", discriminator_manifest(task.discriminator.config())},
                  {"iterations", task.loss_history.size()}};
    ckpt_detail::copy_prefixed(a.tensors, task.generator, "G.");
    ckpt_detail::copy_prefixed(a.tensors, task.discriminator, "D.");
    return a;
}

inline void save_checkpoint(const std::filesystem::path& path, const TrainedTask& task) {
    write_bytes(path, serialize_archive(task_archive(task)));
}

/// Rebuilds a task from an archive. When `expected_resolution` is given the
/// manifest must match it (configuration error otherwise).
inline TrainedTask task_from_archive(const Archive& a, std::optional<int> expected_resolution = std::nullopt) {
    using ckpt_detail::manifest_value;
    try {
        if (a.manifest.value("format", std::string{}) != "crossgan-task")
            throw FormatError("checkpoint is not a crossgan task archive");
        const auto& gm = a.manifest.at("generator");
        const auto& dm = a.manifest.at("discriminator");
        GeneratorConfig gc;
        gc.resolution = manifest_value<int>(gm, "resolution");
        gc.stages = manifest_value<int>(gm, "stages");
        gc.base_filters = manifest_value<int>(gm, "base_filters");
        gc.dropout_rate = manifest_value<double>(gm, "dropout_rate");
        gc.dropout_stages = manifest_value<int>(gm, "dropout_stages");
        gc.channels = manifest_value<int>(gm, "channels");
        DiscriminatorConfig dc;
        dc.resolution = manifest_value<int>(dm, "resolution");
        dc.base_filters = manifest_value<int>(dm, "base_filters");
        dc.downsampling_stages = manifest_value<int>(dm, "downsampling_stages");
        dc.image_channels = manifest_value<int>(dm, "image_channels");
        if (expected_resolution && (gc.resolution != *expected_resolution || dc.resolution != *expected_resolution))
            throw ConfigError("checkpoint was trained at resolution " + std::to_string(gc.resolution) +
                              ", requested " + std::to_string(*expected_resolution));
        TrainedTask task;
        task.direction = parse_direction(manifest_value<std::string>(a.manifest, "direction"));
        task.generator = UNetGenerator<float>(gc);
        task.discriminator = PatchDiscriminator<float>(dc);
        ckpt_detail::fill_prefixed(task.generator, a.tensors, "G.");
        ckpt_detail::fill_prefixed(task.discriminator, a.tensors, "D.");
        if (task.generator.params().size() + task.discriminator.params().size() != a.tensors.size())
            throw FormatError("checkpoint holds tensors the architecture does not use");
        return task;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
    }
}

inline TrainedTask load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_resolution = std::nullopt) {
    return task_from_archive(deserialize_archive(read_bytes(path)), expected_resolution);
}

}  // namespace crossgan
