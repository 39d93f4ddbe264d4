#pragma once

// Test-time pipeline. For each frame F_t with flow O_t the two trained
// discriminators produce score grids S^O = D^{F->O}(F, O) and
// S^F = D^{O->F}(O, F). The grids are summed, divided by the largest fused
// value observed anywhere in the video, upsampled to frame size and turned
// into an abnormality map 1 - N' on moving pixels (0 elsewhere).
// Generators are never evaluated here.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/gan_training.hpp"
#include "crossgan/image_ops.hpp"
#include "crossgan/optical_flow.hpp"
#include "crossgan/parallel.hpp"

namespace crossgan {

struct DetectOptions {
    double motion_epsilon = 0.1;
    int jobs = 1;
};

/// Fused grids of one video together with their common maximum m_s.
struct VideoScores {
    std::vector<ScoreMap> grids;
    float per_video_max = 0.0f;
};

inline void check_task(const TrainedTask& task, Direction expected, int resolution) {
    if (task.direction != expected)
        throw ConfigError("expected a " + to_string(expected) + " checkpoint, got " + to_string(task.direction));
    if (task.resolution() != resolution || task.discriminator.config().resolution != resolution)
        throw ConfigError("checkpoint resolution " + std::to_string(task.resolution()) +
                          " does not match input resolution " + std::to_string(resolution));
}

/// Appearance grid S^F from D^{O->F}(O, F).
inline ScoreMap appearance_score_map(const TrainedTask& task_of, const Frame& frame, const FlowImage& flow) {
    check_task(task_of, Direction::FlowToFrame, frame.pixels.height());
    return {task_of.discriminator.score_grid(flow.channels, frame.pixels), frame.video_id, frame.index};
}

/// Motion grid S^O from D^{F->O}(F, O).
inline ScoreMap motion_score_map(const TrainedTask& task_fo, const Frame& frame, const FlowImage& flow) {
    check_task(task_fo, Direction::FrameToFlow, frame.pixels.height());
    return {task_fo.discriminator.score_grid(frame.pixels, flow.channels), frame.video_id, frame.index};
}

/// Returns (S^F, S^O) for one frame.
inline std::pair<ScoreMap, ScoreMap> frame_score_maps(const TrainedTask& task_fo, const TrainedTask& task_of,
                                                      const Frame& frame, const FlowImage& flow) {
    if (!frame.pixels.same_shape(flow.channels))
        throw InputError("frame_score_maps: frame " + frame.pixels.shape_string() + " and flow " +
                         flow.channels.shape_string() + " differ in shape");
    return {appearance_score_map(task_of, frame, flow), motion_score_map(task_fo, frame, flow)};
}

/// Cell-wise sum S = S^F + S^O.
inline ScoreMap fuse(const ScoreMap& appearance, const ScoreMap& motion) {
    if (!appearance.grid.same_shape(motion.grid))
        throw InputError("fuse: grid shapes differ " + appearance.grid.shape_string() + " vs " +
                         motion.grid.shape_string());
    ScoreMap out = appearance;
    for (std::size_t i = 0; i < out.grid.size(); ++i) out.grid[i] += motion.grid[i];
    return out;
}

/// Divides every grid by the maximum cell over the whole video. A video
/// whose maximum is not positive is returned unchanged.
inline VideoScores normalize_video(std::vector<ScoreMap> grids) {
    if (grids.empty()) throw InputError("normalize_video: empty video");
    float m = grids.front().grid[0];
    for (const auto& g : grids)
        for (float v : g.grid) m = std::max(m, v);
    if (m > 0.0f)
        for (auto& g : grids)
            for (auto& v : g.grid) v /= m;
    return {std::move(grids), m};
}

/// Bilinear upsampling of a normalized grid to height x width.
inline Tensor<float> upsample_grid(const Tensor<float>& grid, int height, int width) {
    return resize_bilinear(grid, height, width);
}

/// A = 1 - N' on pixels whose flow magnitude exceeds `motion_epsilon`, 0 elsewhere.
inline AbnormalityMap abnormality_map(const Tensor<float>& upsampled, const FlowImage& flow, double motion_epsilon) {
    if (upsampled.channels() != 1 || upsampled.height() != flow.height() || upsampled.width() != flow.width())
        throw InputError("abnormality_map: map " + upsampled.shape_string() + " does not match flow " +
                         flow.raw_u.shape_string());
    AbnormalityMap a{Tensor<float>(1, flow.height(), flow.width()), flow.video_id, flow.index};
    const Mask moving = motion_mask(flow, motion_epsilon);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        a.values[i] = moving[i] ? std::clamp(1.0f - upsampled[i], 0.0f, 1.0f) : 0.0f;
    return a;
}

/// Normalization, upsampling and motion gating for per-frame grids of one video.
inline std::vector<AbnormalityMap> maps_from_grids(std::vector<ScoreMap> grids, const std::vector<FlowImage>& flows,
                                                   const DetectOptions& opt) {
    if (grids.size() != flows.size()) throw InputError("maps_from_grids: grid/flow count mismatch");
    VideoScores scores = normalize_video(std::move(grids));
    std::vector<AbnormalityMap> maps(flows.size());
    parallel_for(flows.size(), opt.jobs, [&](std::size_t t) {
        const auto up = upsample_grid(scores.grids[t].grid, flows[t].height(), flows[t].width());
        maps[t] = abnormality_map(up, flows[t], opt.motion_epsilon);
    });
    return maps;
}

inline void check_video(const std::vector<Frame>& frames, const std::vector<FlowImage>& flows) {
    if (frames.empty() || flows.size() + 1 != frames.size())
        throw InputError("detection needs |flows| = |frames| - 1, got " + std::to_string(frames.size()) +
                         " frames and " + std::to_string(flows.size()) + " flows");
    if (flows.empty()) throw InputError("detection needs at least two frames");
}

/// Full discriminator-based detection on one video; one map per flow.
inline std::vector<AbnormalityMap> detect_video(const TrainedTask& task_fo, const TrainedTask& task_of,
                                                const std::vector<Frame>& frames, const std::vector<FlowImage>& flows,
                                                const DetectOptions& opt = {}) {
    check_video(frames, flows);
    std::vector<ScoreMap> fused(flows.size());
    parallel_for(flows.size(), opt.jobs, [&](std::size_t t) {
        auto [s_f, s_o] = frame_score_maps(task_fo, task_of, frames[t], flows[t]);
        fused[t] = fuse(s_f, s_o);
    });
    return maps_from_grids(std::move(fused), flows, opt);
}

/// Largest value of each map (the frame-level score).
inline std::vector<float> frame_maxima(const std::vector<AbnormalityMap>& maps) {
    std::vector<float> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(*std::max_element(m.values.begin(), m.values.end()));
    return out;
}

}  // namespace crossgan
