#pragma once

// Value types shared by every stage of the method, plus the flow encoding
// and training-pair construction.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"
#include "crossgan/image_ops.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan {

using Image = Tensor<float>;
using Mask = Tensor<std::uint8_t>;

inline constexpr int kDefaultResolution = 256;

/// One RGB video frame: 3 x H x W, unit range.
struct Frame {
    Image pixels;
    int index = 0;
    std::string video_id;
};

/// Dense optical flow. `channels` is the 3-channel (u, v, magnitude) encoding
/// in unit range; raw_u / raw_v keep the unclamped displacement in px/frame.
struct FlowImage {
    Image channels;
    Tensor<float> raw_u;
    Tensor<float> raw_v;
    int index = 0;
    std::string video_id;

    int height() const { return raw_u.height(); }
    int width() const { return raw_u.width(); }

    float raw_magnitude(std::size_t i) const { return std::hypot(raw_u[i], raw_v[i]); }
};

enum class Direction { FrameToFlow, FlowToFrame };

inline std::string to_string(Direction d) { return d == Direction::FrameToFlow ? "f2o" : "o2f"; }

inline Direction parse_direction(const std::string& s) {
    if (s == "f2o") return Direction::FrameToFlow;
    if (s == "o2f") return Direction::FlowToFrame;
    throw ConfigError("direction must be f2o or o2f, got '" + s + "'");
}

struct PairedSample {
    Image input;
    Image target;
    Direction direction = Direction::FrameToFlow;
    std::string video_id;
    int index = 0;
};

/// Patch-discriminator output (1 x g x g) for one frame.
struct ScoreMap {
    Tensor<float> grid;
    std::string video_id;
    int index = 0;
};

/// Full-resolution per-pixel abnormality (1 x H x W) in [0, 1].
struct AbnormalityMap {
    Tensor<float> values;
    std::string video_id;
    int index = 0;
};

struct GroundTruth {
    bool abnormal = false;
    std::optional<Mask> pixel_mask;

    static GroundTruth normal() { return {}; }

    /// Frame label derived from the mask: abnormal iff any pixel is set.
    static GroundTruth from_mask(Mask mask) {
        GroundTruth gt;
        for (auto v : mask)
            if (v) {
                gt.abnormal = true;
                break;
            }
        gt.pixel_mask = std::move(mask);
        return gt;
    }

    bool consistent() const {
        if (!pixel_mask) return true;
        bool any = false;
        for (auto v : *pixel_mask) any = any || v != 0;
        return any == abnormal;
    }
};

/// Symmetric clamp-and-scale mapping between raw flow and unit-range channels.
struct FlowEncoding {
    /// Displacements are clamped to [-max_displacement, +max_displacement] px.
    double max_displacement = 16.0;

    double max_magnitude() const { return max_displacement * std::sqrt(2.0); }

    float encode_component(float d) const {
        const double c = max_displacement;
        return static_cast<float>((std::clamp(static_cast<double>(d), -c, c) + c) / (2.0 * c));
    }
    float decode_component(float e) const {
        return static_cast<float>(static_cast<double>(e) * 2.0 * max_displacement - max_displacement);
    }
    float encode_magnitude(float m) const {
        return static_cast<float>(std::clamp(static_cast<double>(m), 0.0, max_magnitude()) / max_magnitude());
    }
    float decode_magnitude(float e) const { return static_cast<float>(static_cast<double>(e) * max_magnitude()); }
};

inline FlowImage encode_flow(const Tensor<float>& raw_u, const Tensor<float>& raw_v, const FlowEncoding& enc = {},
                             int index = 0, std::string video_id = {}) {
    if (!raw_u.same_shape(raw_v) || raw_u.channels() != 1)
        throw InputError("encode_flow: u/v must be single-channel arrays of equal shape, got " +
                         raw_u.shape_string() + " and " + raw_v.shape_string());
    FlowImage f;
    f.raw_u = raw_u;
    f.raw_v = raw_v;
    f.index = index;
    f.video_id = std::move(video_id);
    f.channels = Image(3, raw_u.height(), raw_u.width());
    auto u = f.channels.plane(0), v = f.channels.plane(1), m = f.channels.plane(2);
    for (std::size_t i = 0; i < raw_u.size(); ++i) {
        u[i] = enc.encode_component(raw_u[i]);
        v[i] = enc.encode_component(raw_v[i]);
        m[i] = enc.encode_magnitude(std::hypot(raw_u[i], raw_v[i]));
    }
    return f;
}

/// Recovers (u, v) in px/frame from the encoded channels.
inline std::pair<Tensor<float>, Tensor<float>> decode_flow(const Image& channels, const FlowEncoding& enc = {}) {
    if (channels.channels() != 3) throw InputError("decode_flow: expected 3 channels, got " + channels.shape_string());
    Tensor<float> u(1, channels.height(), channels.width());
    Tensor<float> v(1, channels.height(), channels.width());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = enc.decode_component(channels.plane(0)[i]);
        v[i] = enc.decode_component(channels.plane(1)[i]);
    }
    return {std::move(u), std::move(v)};
}

/// Brings an arbitrary 1- or 3-channel image to the working resolution.
/// Grayscale is replicated to RGB; values are clamped to [0, 1].
inline Frame rescale_frame(const Image& image, int resolution = kDefaultResolution, int index = 0,
                           std::string video_id = {}) {
    if (image.empty()) throw InputError("rescale_frame: empty image");
    if (image.channels() != 1 && image.channels() != 3)
        throw InputError("rescale_frame: expected 1 or 3 channels, got " + image.shape_string());
    Image resized = resize_bilinear(image, resolution, resolution);
    Frame f;
    f.index = index;
    f.video_id = std::move(video_id);
    if (resized.channels() == 1) {
        f.pixels = Image(3, resolution, resolution);
        for (int c = 0; c < 3; ++c) std::copy(resized.begin(), resized.end(), f.pixels.plane(c).begin());
    } else {
        f.pixels = std::move(resized);
    }
    for (auto& v : f.pixels) v = std::clamp(v, 0.0f, 1.0f);
    return f;
}

/// Pairs frame t with the flow computed from frames t and t+1.
inline std::vector<PairedSample> build_pairs(const std::vector<Frame>& frames, const std::vector<FlowImage>& flows,
                                             Direction direction) {
    if (frames.empty() || flows.size() + 1 != frames.size())
        throw InputError("build_pairs: expected " + std::to_string(frames.empty() ? 0 : frames.size() - 1) +
                         " flows for " + std::to_string(frames.size()) + " frames, got " +
                         std::to_string(flows.size()));
    std::vector<PairedSample> out;
    out.reserve(flows.size());
    for (std::size_t t = 0; t < flows.size(); ++t) {
        const Frame& f = frames[t];
        const FlowImage& o = flows[t];
        if (f.video_id != o.video_id || f.index != o.index)
            throw InputError("build_pairs: frame/flow identity mismatch at position " + std::to_string(t));
        PairedSample s;
        s.direction = direction;
        s.video_id = f.video_id;
        s.index = f.index;
        if (direction == Direction::FrameToFlow) {
            s.input = f.pixels;
            s.target = o.channels;
        } else {
            s.input = o.channels;
            s.target = f.pixels;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace crossgan
