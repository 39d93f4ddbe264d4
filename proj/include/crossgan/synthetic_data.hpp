#pragma once

// Toy crowd scenes for desk-scale experiments. A static textured background
// is shared by every video of a scene; round "pedestrian" agents wander at a
// fixed speed and bounce off the image borders. Abnormal videos add one
// square "vehicle" that is either fast (speed multiplier) or large (twice the
// agent size), visible during a contiguous window of frames. Randomness comes
// only from crossgan::Rng (std::mt19937_64), so output is bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/rng.hpp"

namespace crossgan {

enum class AnomalyKind { FastObject, LargeObject };

inline std::string to_string(AnomalyKind k) { return k == AnomalyKind::FastObject ? "fast_object" : "large_object"; }

inline AnomalyKind parse_anomaly_kind(const std::string& s) {
    if (s == "fast_object") return AnomalyKind::FastObject;
    if (s == "large_object") return AnomalyKind::LargeObject;
    throw ConfigError("anomaly_kind must be fast_object or large_object, got '" + s + "'");
}

struct SceneSpec {
    int resolution = 64;
    int agent_count = 4;
    /// Agent diameter in pixels.
    double agent_size = 8.0;
    /// Agent displacement per frame in pixels.
    double normal_speed = 1.0;
    AnomalyKind anomaly_kind = AnomalyKind::FastObject;
    double anomaly_speed_multiplier = 4.0;
    int frames_per_video = 200;
    int train_videos = 2;
    int test_videos = 2;
    std::uint64_t seed = 0;

    void validate() const {
        if (resolution < 8) throw ConfigError("scene resolution must be >= 8");
        if (agent_count < 0) throw ConfigError("agent_count must be nonnegative");
        if (!(agent_size >= 2.0) || agent_size * 4 > resolution)
            throw ConfigError("agent_size must be in [2, resolution/4]");
        if (!(normal_speed >= 0.0)) throw ConfigError("normal_speed must be nonnegative");
        if (!(anomaly_speed_multiplier > 1.0)) throw ConfigError("anomaly_speed_multiplier must be > 1");
        if (frames_per_video < 1) throw InputError("frames_per_video must be >= 1");
        if (train_videos < 0 || test_videos < 0) throw ConfigError("video counts must be nonnegative");
    }

    /// Side length of the anomalous object.
    double anomaly_size() const { return anomaly_kind == AnomalyKind::LargeObject ? 2.0 * agent_size : agent_size; }
    /// Speed of the anomalous object in px/frame.
    double anomaly_speed() const {
        return anomaly_kind == AnomalyKind::FastObject ? anomaly_speed_multiplier * normal_speed : normal_speed;
    }
};

struct MovingObject {
    double x = 0, y = 0;    // centre, continuous pixel coordinates
    double vx = 0, vy = 0;  // px/frame
    double half = 0;        // radius or half side

    /// Advances one frame, reflecting off [half, size - half].
    void step(int size) {
        x += vx;
        y += vy;
        const double lo = half, hi = size - half;
        if (x < lo) { x = 2 * lo - x; vx = -vx; }
        if (x > hi) { x = 2 * hi - x; vx = -vx; }
        if (y < lo) { y = 2 * lo - y; vy = -vy; }
        if (y > hi) { y = 2 * hi - y; vy = -vy; }
    }
};

struct SyntheticVideo {
    std::string id;
    std::vector<Frame> frames;
    std::vector<GroundTruth> truth;
    /// State of the anomalous object at every frame (nullopt when absent).
    std::vector<std::optional<MovingObject>> anomaly_track;
    /// State of every normal agent at every frame.
    std::vector<std::vector<MovingObject>> agent_tracks;
};

namespace synth_detail {

inline MovingObject spawn(Rng& rng, int size, double half, double speed) {
    MovingObject o;
    o.half = half;
    o.x = rng.uniform(half, size - half);
    o.y = rng.uniform(half, size - half);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    o.vx = speed * std::cos(angle);
    o.vy = speed * std::sin(angle);
    return o;
}

/// Static background: low-frequency sinusoids plus smoothed noise on a grey-green base.
inline Image background(const SceneSpec& spec) {
    const int n = spec.resolution;
    Rng rng(derive_seed(spec.seed, 7));
    Image bg(3, n, n);
    const double base[3] = {0.50, 0.55, 0.48};
    for (int c = 0; c < 3; ++c)
        for (auto& v : bg.plane(c)) v = static_cast<float>(base[c]);
    for (int k = 0; k < 6; ++k) {
        const double fx = rng.uniform(0.5, 4.0) * 2.0 * std::numbers::pi / n;
        const double fy = rng.uniform(0.5, 4.0) * 2.0 * std::numbers::pi / n;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.02, 0.06);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const float d = static_cast<float>(amp * std::sin(fx * x + fy * y + phase));
                for (int c = 0; c < 3; ++c) bg(c, y, x) += d;
            }
    }
    Tensor<float> noise(1, n, n);
    for (auto& v : noise) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            float s = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    s += noise(0, std::clamp(y + dy, 0, n - 1), std::clamp(x + dx, 0, n - 1));
            for (int c = 0; c < 3; ++c) bg(c, y, x) += 0.08f * s / 9.0f;
        }
    for (auto& v : bg) v = std::clamp(v, 0.0f, 1.0f);
    return bg;
}

inline double coverage_1d(double pixel_centre, double centre, double half) {
    return std::clamp(half + 0.5 - std::abs(pixel_centre - centre), 0.0, 1.0);
}

/// Round agent: dark blue body with a brighter centre.
inline void draw_agent(Image& img, const MovingObject& o) {
    const int n = img.height();
    const int x0 = std::max(0, static_cast<int>(o.x - o.half) - 1), x1 = std::min(n - 1, static_cast<int>(o.x + o.half) + 1);
    const int y0 = std::max(0, static_cast<int>(o.y - o.half) - 1), y1 = std::min(n - 1, static_cast<int>(o.y + o.half) + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x + 0.5 - o.x, y + 0.5 - o.y);
            const double a = std::clamp(o.half + 0.5 - d, 0.0, 1.0);
            if (a <= 0.0) continue;
            const double shade = 0.25 * std::max(0.0, 1.0 - d / o.half);
            const double col[3] = {0.12 + shade, 0.18 + shade, 0.45 + shade};
            for (int c = 0; c < 3; ++c) img(c, y, x) = static_cast<float>((1 - a) * img(c, y, x) + a * col[c]);
        }
}

/// Square vehicle: amber body with a dark band across the middle.
inline void draw_vehicle(Image& img, const MovingObject& o, Mask* footprint) {
    const int n = img.height();
    const int x0 = std::max(0, static_cast<int>(o.x - o.half) - 1), x1 = std::min(n - 1, static_cast<int>(o.x + o.half) + 1);
    const int y0 = std::max(0, static_cast<int>(o.y - o.half) - 1), y1 = std::min(n - 1, static_cast<int>(o.y + o.half) + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double a = coverage_1d(x + 0.5, o.x, o.half) * coverage_1d(y + 0.5, o.y, o.half);
            if (a <= 0.0) continue;
            const bool band = std::abs(y + 0.5 - o.y) < o.half * 0.3;
            const double col[3] = {band ? 0.35 : 0.90, band ? 0.20 : 0.65, band ? 0.05 : 0.10};
            for (int c = 0; c < 3; ++c) img(c, y, x) = static_cast<float>((1 - a) * img(c, y, x) + a * col[c]);
            if (footprint && a >= 0.5) (*footprint)(0, y, x) = 1;
        }
}

inline SyntheticVideo render(const SceneSpec& spec, std::uint64_t stream, std::string video_id, bool with_anomaly) {
    spec.validate();
    const int n = spec.resolution;
    const Image bg = background(spec);
    Rng rng(derive_seed(spec.seed, stream));

    std::vector<MovingObject> agents;
    for (int i = 0; i < spec.agent_count; ++i) agents.push_back(spawn(rng, n, spec.agent_size / 2.0, spec.normal_speed));

    int onset = spec.frames_per_video, offset = spec.frames_per_video;
    MovingObject vehicle;
    if (with_anomaly) {
        const int f = spec.frames_per_video;
        onset = f / 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, f / 8))));
        offset = std::min(f, onset + std::max(1, f / 2));
        vehicle = spawn(rng, n, spec.anomaly_size() / 2.0, spec.anomaly_speed());
    }

    SyntheticVideo video;
    video.id = std::move(video_id);
    for (int t = 0; t < spec.frames_per_video; ++t) {
        Image img = bg;
        for (const auto& a : agents) draw_agent(img, a);
        Mask mask(1, n, n);
        const bool visible = with_anomaly && t >= onset && t < offset;
        if (visible) draw_vehicle(img, vehicle, &mask);
        for (auto& v : img) v = std::clamp(v, 0.0f, 1.0f);

        video.frames.push_back({std::move(img), t, video.id});
        video.truth.push_back(GroundTruth::from_mask(std::move(mask)));
        video.anomaly_track.push_back(visible ? std::optional<MovingObject>(vehicle) : std::nullopt);
        video.agent_tracks.push_back(agents);

        for (auto& a : agents) a.step(n);
        if (visible) vehicle.step(n);
    }
    return video;
}

}  // namespace synth_detail

/// Normal-only footage: every frame labelled normal with an empty mask.
inline SyntheticVideo generate_normal_video(const SceneSpec& spec, std::uint64_t stream = 0,
                                            std::string video_id = "normal_000") {
    return synth_detail::render(spec, 1000 + stream, std::move(video_id), false);
}

/// Footage containing one anomalous object during a window of frames.
inline SyntheticVideo generate_abnormal_video(const SceneSpec& spec, std::uint64_t stream = 0,
                                              std::string video_id = "abnormal_000") {
    return synth_detail::render(spec, 2000 + stream, std::move(video_id), true);
}

inline std::string video_name(const std::string& prefix, int i) {
    std::string digits = std::to_string(i);
    return prefix + "_" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

struct SyntheticDataset {
    std::vector<SyntheticVideo> train;
    std::vector<SyntheticVideo> test;
};

inline SyntheticDataset generate_dataset(const SceneSpec& spec) {
    spec.validate();
    SyntheticDataset d;
    for (int i = 0; i < spec.train_videos; ++i)
        d.train.push_back(generate_normal_video(spec, static_cast<std::uint64_t>(i), video_name("train", i)));
    for (int i = 0; i < spec.test_videos; ++i)
        d.test.push_back(generate_abnormal_video(spec, static_cast<std::uint64_t>(i), video_name("test", i)));
    return d;
}

}  // namespace crossgan
