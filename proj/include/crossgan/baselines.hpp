#pragma once

// Ablation systems: reconstruction-error detection with the two generators
// and single-channel discriminator detection.

#include <algorithm>
#include <string>
#include <vector>

#include "crossgan/detection.hpp"

namespace crossgan {

struct ReconstructionErrors {
    Image appearance;  // e_F = |F - r_F|
    Image motion;      // e_O = |O - r_O|
};

struct Reconstructions {
    Image motion;      // r_O = G^{F->O}(F)
    Image appearance;  // r_F = G^{O->F}(O)
};

/// Cross-channel reconstructions with dropout disabled.
inline Reconstructions reconstruct(const TrainedTask& task_fo, const TrainedTask& task_of, const Frame& frame,
                                   const FlowImage& flow) {
    check_task(task_fo, Direction::FrameToFlow, frame.pixels.height());
    check_task(task_of, Direction::FlowToFrame, frame.pixels.height());
    return {task_fo.generator.forward(frame.pixels), task_of.generator.forward(flow.channels)};
}

inline Image absolute_difference(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InputError("shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    Image out(a.channels(), a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i] - b[i]);
    return out;
}

inline ReconstructionErrors reconstruction_errors(const Image& frame, const Image& flow, const Image& r_frame,
                                                  const Image& r_flow) {
    return {absolute_difference(frame, r_frame), absolute_difference(flow, r_flow)};
}

/// Weights of the appearance / motion error maps in the generator baseline.
inline constexpr float kAppearanceErrorWeight = 1.0f;
inline constexpr float kMotionErrorWeight = 2.0f;

namespace baseline_detail {

inline Tensor<float> channel_mean(const Image& e) {
    Tensor<float> out(1, e.height(), e.width());
    for (int c = 0; c < e.channels(); ++c) {
        auto p = e.plane(c);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
    for (auto& v : out) v /= static_cast<float>(e.channels());
    return out;
}

inline void normalize_by_video_max(std::vector<Tensor<float>>& maps) {
    float m = 0.0f;
    for (const auto& t : maps)
        for (float v : t) m = std::max(m, v);
    if (m > 0.0f)
        for (auto& t : maps)
            for (auto& v : t) v /= m;
}

}  // namespace baseline_detail

/// Reconstruction-error abnormality maps for one video: colour-averaged
/// errors, each channel normalized by its own per-video maximum, fused as
/// (e_F + 2 e_O) / 3 and gated by motion. High error means abnormal.
inline std::vector<AbnormalityMap> generator_baseline_map(const std::vector<ReconstructionErrors>& errors,
                                                          const std::vector<FlowImage>& flows,
                                                          const DetectOptions& opt = {}) {
    if (errors.empty()) throw InputError("generator_baseline_map: empty video");
    if (errors.size() != flows.size()) throw InputError("generator_baseline_map: error/flow count mismatch");
    std::vector<Tensor<float>> app, mot;
    for (const auto& e : errors) {
        app.push_back(resize_bilinear(baseline_detail::channel_mean(e.appearance), flows.front().height(),
                                      flows.front().width()));
        mot.push_back(resize_bilinear(baseline_detail::channel_mean(e.motion), flows.front().height(),
                                      flows.front().width()));
    }
    baseline_detail::normalize_by_video_max(app);
    baseline_detail::normalize_by_video_max(mot);

    std::vector<AbnormalityMap> maps(errors.size());
    const float total = kAppearanceErrorWeight + kMotionErrorWeight;
    for (std::size_t t = 0; t < errors.size(); ++t) {
        const Mask moving = motion_mask(flows[t], opt.motion_epsilon);
        AbnormalityMap a{Tensor<float>(1, flows[t].height(), flows[t].width()), flows[t].video_id, flows[t].index};
        for (std::size_t i = 0; i < a.values.size(); ++i)
            a.values[i] = moving[i] ? (kAppearanceErrorWeight * app[t][i] + kMotionErrorWeight * mot[t][i]) / total : 0.0f;
        maps[t] = std::move(a);
    }
    return maps;
}

/// Convenience: runs both generators over a video and builds the baseline maps.
inline std::vector<AbnormalityMap> detect_video_generator(const TrainedTask& task_fo, const TrainedTask& task_of,
                                                          const std::vector<Frame>& frames,
                                                          const std::vector<FlowImage>& flows,
                                                          const DetectOptions& opt = {}) {
    check_video(frames, flows);
    std::vector<ReconstructionErrors> errors(flows.size());
    parallel_for(flows.size(), opt.jobs, [&](std::size_t t) {
        const auto r = reconstruct(task_fo, task_of, frames[t], flows[t]);
        errors[t] = reconstruction_errors(frames[t].pixels, flows[t].channels, r.appearance, r.motion);
    });
    return generator_baseline_map(errors, flows, opt);
}

enum class SingleChannel { Appearance, Motion };

/// Discriminator pipeline restricted to one grid: Appearance uses D^{O->F}
/// (the task must be O->F), Motion uses D^{F->O}.
inline std::vector<AbnormalityMap> single_channel_map(const TrainedTask& task, SingleChannel channel,
                                                      const std::vector<Frame>& frames,
                                                      const std::vector<FlowImage>& flows,
                                                      const DetectOptions& opt = {}) {
    check_video(frames, flows);
    std::vector<ScoreMap> grids(flows.size());
    parallel_for(flows.size(), opt.jobs, [&](std::size_t t) {
        grids[t] = channel == SingleChannel::Appearance ? appearance_score_map(task, frames[t], flows[t])
                                                        : motion_score_map(task, frames[t], flows[t]);
    });
    return maps_from_grids(std::move(grids), flows, opt);
}

}  // namespace crossgan
