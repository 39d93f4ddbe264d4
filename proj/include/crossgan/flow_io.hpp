#pragma once

// Reader/writer for the two-band ".flo" flow file format: the float 202021.25
// ("PIEH"), int32 width, int32 height, then width*height interleaved (u, v)
// float32 pairs in row-major order; everything little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"

namespace crossgan {

inline constexpr float kFloMagic = 202021.25f;

namespace io_detail {

static_assert(std::endian::native == std::endian::little, "flow and checkpoint I/O assume a little-endian host");

template <typename V>
void write_pod(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& is, const std::string& what) {
    V v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) throw FormatError("truncated " + what);
    return v;
}

}  // namespace io_detail

inline void save_flow(const std::filesystem::path& path, const Tensor<float>& u, const Tensor<float>& v) {
    if (!u.same_shape(v) || u.channels() != 1) throw InputError("save_flow: u/v shape mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + path.string() + " for writing");
    io_detail::write_pod(os, kFloMagic);
    io_detail::write_pod(os, static_cast<std::int32_t>(u.width()));
    io_detail::write_pod(os, static_cast<std::int32_t>(u.height()));
    std::vector<float> buf(2 * u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        buf[2 * i] = u[i];
        buf[2 * i + 1] = v[i];
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!os) throw FormatError("failed writing " + path.string());
}

inline std::pair<Tensor<float>, Tensor<float>> read_flow(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open flow file " + path.string());
    const std::string what = "flow file " + path.string();
    const auto magic = io_detail::read_pod<float>(is, what);
    if (std::memcmp(&magic, &kFloMagic, sizeof(float)) != 0) throw FormatError("bad magic number in " + what);
    const auto w = io_detail::read_pod<std::int32_t>(is, what);
    const auto h = io_detail::read_pod<std::int32_t>(is, what);
    if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError("bad dimensions in " + what);
    std::vector<float> buf(2 * static_cast<std::size_t>(w) * h);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float))))
        throw FormatError("truncated " + what);
    Tensor<float> u(1, h, w), v(1, h, w);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = buf[2 * i];
        v[i] = buf[2 * i + 1];
    }
    return {std::move(u), std::move(v)};
}

/// Loads an externally computed flow field and encodes it.
inline FlowImage load_precomputed_flow(const std::filesystem::path& path, const FlowEncoding& enc = {}, int index = 0,
                                       std::string video_id = {}) {
    auto [u, v] = read_flow(path);
    return encode_flow(u, v, enc, index, std::move(video_id));
}

/// Resamples a raw flow field to resolution x resolution, scaling the vectors
/// by the same factors as the image axes.
inline FlowImage rescale_flow(const FlowImage& flow, int resolution, const FlowEncoding& enc = {}) {
    if (flow.height() == resolution && flow.width() == resolution) return flow;
    const float sy = static_cast<float>(resolution) / flow.height();
    const float sx = static_cast<float>(resolution) / flow.width();
    Tensor<float> u = resize_bilinear(flow.raw_u, resolution, resolution);
    Tensor<float> v = resize_bilinear(flow.raw_v, resolution, resolution);
    for (auto& x : u) x *= sx;
    for (auto& y : v) y *= sy;
    return encode_flow(u, v, enc, flow.index, flow.video_id);
}

}  // namespace crossgan
