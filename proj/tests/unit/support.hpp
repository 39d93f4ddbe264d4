#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crossgan/crossgan.hpp"

namespace testing_support {

using namespace crossgan;

template <typename T = float>
Tensor<T> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor<T> t(c, h, w);
    for (auto& v : t) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

inline Frame random_frame(int res, std::uint64_t seed, int index = 0, std::string id = "v") {
    return {random_tensor(3, res, res, seed), index, std::move(id)};
}

/// Flow image built from uniform random displacements in [-amp, amp].
inline FlowImage random_flow(int res, std::uint64_t seed, double amp = 2.0, int index = 0, std::string id = "v") {
    return encode_flow(random_tensor(1, res, res, seed, -amp, amp), random_tensor(1, res, res, seed + 7, -amp, amp), {},
                       index, std::move(id));
}

inline FlowImage constant_flow(int res, float u, float v, int index = 0, std::string id = "v") {
    return encode_flow(Tensor<float>(1, res, res, u), Tensor<float>(1, res, res, v), {}, index, std::move(id));
}

/// ||a - b|| / max(||a||, ||b||), or the absolute norm when both are tiny.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nb));
    return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

/// Central finite differences of f with respect to every entry of `values`.
template <typename Values>
std::vector<double> numeric_gradient(Values& values, const std::function<double()>& f, double h = 1e-6) {
    std::vector<double> g(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double keep = values[i];
        values[i] = keep + h;
        const double up = f();
        values[i] = keep - h;
        const double down = f();
        values[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("crossgan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Small scene used by tests that need real footage.
inline SceneSpec tiny_scene(int frames = 40) {
    SceneSpec s;
    s.resolution = 32;
    s.agent_count = 3;
    s.agent_size = 6;
    s.frames_per_video = frames;
    s.train_videos = 1;
    s.test_videos = 1;
    s.seed = 3;
    return s;
}

inline std::vector<FlowImage> video_flows(const std::vector<Frame>& frames, const FlowConfig& cfg = {}) {
    std::vector<FlowImage> out;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) out.push_back(compute_flow(frames[t], frames[t + 1], cfg));
    return out;
}

struct ToyModels {
    SyntheticDataset data;
    std::vector<FlowImage> train_flows;
    std::vector<FlowImage> test_flows;
    TrainedTask fo;
    TrainedTask of;
};

/// Both tasks trained briefly on the tiny scene; built once per process.
inline const ToyModels& toy_models() {
    static const ToyModels models = [] {
        ToyModels m;
        m.data = generate_dataset(tiny_scene());
        m.train_flows = video_flows(m.data.train[0].frames);
        m.test_flows = video_flows(m.data.test[0].frames);
        TrainConfig cfg;
        cfg.resolution = 32;
        cfg.base_filters = 8;
        cfg.epochs = 10;
        cfg.seed = 5;
        cfg.optimizer = nn::OptimizerKind::Adam;
        m.fo = train_task(build_pairs(m.data.train[0].frames, m.train_flows, Direction::FrameToFlow), cfg);
        m.of = train_task(build_pairs(m.data.train[0].frames, m.train_flows, Direction::FlowToFrame), cfg);
        return m;
    }();
    return models;
}

}  // namespace testing_support
