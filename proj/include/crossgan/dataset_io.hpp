#pragma once

// On-disk dataset layout:
//   <root>/<video_id>/frames/%06d.png
//   <root>/<video_id>/flow/%06d.flo     optional, flow from frame t to t+1
//   <root>/<video_id>/gt/%06d.png       optional, nonzero = abnormal
// Abnormality maps are written as <out>/<video_id>/%06d.png (16-bit,
// round(A * 65535)) next to <out>/scores.csv.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/flow_io.hpp"
#include "crossgan/optical_flow.hpp"
#include "crossgan/parallel.hpp"

namespace crossgan {

namespace fs = std::filesystem;

inline std::string frame_file_name(int index, const char* ext = ".png") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d%s", index, ext);
    return buf;
}

// ---------------------------------------------------------------- images

/// Reads an 8- or 16-bit PNG/JPEG as a 1- or 3-channel unit-range image (RGB order).
inline Image read_image(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw InputError("cannot read image " + path.string());
    double scale = 0;
    switch (m.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        default: throw InputError("unsupported image depth in " + path.string());
    }
    const int stride = m.channels();
    if (stride != 1 && stride != 3 && stride != 4) throw InputError("unsupported channel count in " + path.string());
    cv::Mat f;
    m.convertTo(f, CV_MAKETYPE(CV_32F, stride), scale);
    const int ch = stride == 1 ? 1 : 3;  // alpha is dropped
    Image img(ch, f.rows, f.cols);
    for (int y = 0; y < f.rows; ++y) {
        const float* row = f.ptr<float>(y);
        for (int x = 0; x < f.cols; ++x)
            for (int c = 0; c < ch; ++c) img(ch == 3 ? 2 - c : c, y, x) = row[x * stride + c];
    }
    return img;
}

inline void write_png(const fs::path& path, const cv::Mat& m) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m)) throw InputError("cannot write " + path.string());
}

/// Writes a unit-range RGB or grayscale image as 8-bit PNG.
inline void write_image(const fs::path& path, const Image& img) {
    if (img.channels() != 1 && img.channels() != 3) throw InputError("write_image: need 1 or 3 channels");
    const int ch = img.channels();
    cv::Mat m(img.height(), img.width(), ch == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < ch; ++c) {
                const float v = std::clamp(img(ch == 3 ? 2 - c : c, y, x), 0.0f, 1.0f);
                row[x * ch + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    }
    write_png(path, m);
}

inline void write_mask(const fs::path& path, const Mask& mask) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) m.at<unsigned char>(y, x) = mask(0, y, x) ? 255 : 0;
    write_png(path, m);
}

inline Mask read_mask(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
    if (m.empty()) throw InputError("cannot read mask " + path.string());
    Mask mask(1, m.rows, m.cols);
    cv::Mat nz = m != 0;
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) mask(0, y, x) = nz.at<unsigned char>(y, x) ? 1 : 0;
    return mask;
}

/// Nearest-neighbour resize for label masks.
inline Mask resize_mask(const Mask& mask, int height, int width) {
    if (mask.height() == height && mask.width() == width) return mask;
    Mask out(1, height, width);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / width));
            out(0, y, x) = mask(0, sy, sx);
        }
    }
    return out;
}

inline constexpr double kMapScale = 65535.0;

inline void write_map(const fs::path& path, const AbnormalityMap& map) {
    const Tensor<float>& a = map.values;
    cv::Mat m(a.height(), a.width(), CV_16UC1);
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            m.at<std::uint16_t>(y, x) =
                static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(a(0, y, x)), 0.0, 1.0) * kMapScale));
    write_png(path, m);
}

inline AbnormalityMap read_map(const fs::path& path, int index = 0, std::string video_id = {}) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw InputError("cannot read map " + path.string());
    if (m.type() != CV_16UC1) throw FormatError("map " + path.string() + " is not a 16-bit grayscale PNG");
    AbnormalityMap a{Tensor<float>(1, m.rows, m.cols), std::move(video_id), index};
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            a.values(0, y, x) = static_cast<float>(m.at<std::uint16_t>(y, x) / kMapScale);
    return a;
}

// ---------------------------------------------------------------- videos

struct VideoData {
    std::string id;
    std::vector<Frame> frames;
    std::vector<FlowImage> flows;
    /// One entry per frame; normal when no gt file exists.
    std::vector<GroundTruth> truth;
};

/// Sorted video directories under root (those with a frames/ subdirectory).
inline std::vector<fs::path> list_videos(const fs::path& root) {
    if (!fs::is_directory(root)) throw InputError("not a directory: " + root.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::is_directory(e.path() / "frames")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw InputError("no videos (<id>/frames/) under " + root.string());
    return out;
}

/// Numbered files in dir with the given extension, keyed by index.
inline std::map<int, fs::path> numbered_files(const fs::path& dir, const std::string& ext) {
    std::map<int, fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ext) continue;
        const std::string stem = e.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) continue;
        out[std::stoi(stem)] = e.path();
    }
    return out;
}

enum class FlowSource { Computed, Precomputed };

inline FlowSource parse_flow_source(const std::string& s) {
    if (s == "computed") return FlowSource::Computed;
    if (s == "precomputed") return FlowSource::Precomputed;
    throw ConfigError("flow source must be computed or precomputed, got '" + s + "'");
}

struct LoadOptions {
    int resolution = kDefaultResolution;
    FlowSource flow_source = FlowSource::Computed;
    FlowConfig flow;
    int jobs = 1;
};

inline VideoData load_video(const fs::path& dir, const LoadOptions& opt) {
    VideoData v;
    v.id = dir.filename().string();
    const auto frame_files = numbered_files(dir / "frames", ".png");
    if (frame_files.size() < 2) throw InputError("video " + v.id + " needs at least two frames");
    for (const auto& [idx, path] : frame_files) v.frames.push_back(rescale_frame(read_image(path), opt.resolution, idx, v.id));

    const auto gt_files = numbered_files(dir / "gt", ".png");
    for (const auto& f : v.frames) {
        auto it = gt_files.find(f.index);
        v.truth.push_back(it == gt_files.end() ? GroundTruth::normal()
                                               : GroundTruth::from_mask(resize_mask(read_mask(it->second),
                                                                                    opt.resolution, opt.resolution)));
    }

    v.flows.resize(v.frames.size() - 1);
    if (opt.flow_source == FlowSource::Precomputed) {
        const auto flo = numbered_files(dir / "flow", ".flo");
        for (std::size_t t = 0; t < v.flows.size(); ++t) {
            auto it = flo.find(v.frames[t].index);
            if (it == flo.end())
                throw InputError("video " + v.id + ": missing flow/" + frame_file_name(v.frames[t].index, ".flo"));
            v.flows[t] = rescale_flow(load_precomputed_flow(it->second, opt.flow.encoding, v.frames[t].index, v.id),
                                      opt.resolution, opt.flow.encoding);
        }
    } else {
        parallel_for(v.flows.size(), opt.jobs,
                     [&](std::size_t t) { v.flows[t] = compute_flow(v.frames[t], v.frames[t + 1], opt.flow); });
    }
    return v;
}

inline std::vector<VideoData> load_dataset(const fs::path& root, const LoadOptions& opt) {
    std::vector<VideoData> out;
    for (const auto& dir : list_videos(root)) out.push_back(load_video(dir, opt));
    return out;
}

/// Writes frames and ground truth (masks only for abnormal frames).
inline void write_video(const fs::path& root, const std::string& id, const std::vector<Frame>& frames,
                        const std::vector<GroundTruth>& truth) {
    const fs::path dir = root / id;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        write_image(dir / "frames" / frame_file_name(frames[t].index), frames[t].pixels);
        if (t < truth.size() && truth[t].abnormal && truth[t].pixel_mask)
            write_mask(dir / "gt" / frame_file_name(frames[t].index), *truth[t].pixel_mask);
    }
}

// ---------------------------------------------------------------- maps

struct MapRecord {
    std::string video_id;
    int index = 0;
    double max_score = 0;
};

inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Writes every map plus scores.csv (video_id,index,max).
inline void write_maps(const fs::path& out, const std::vector<AbnormalityMap>& maps) {
    fs::create_directories(out);
    std::ofstream idx(out / "scores.csv", std::ios::binary);
    if (!idx) throw InputError("cannot write " + (out / "scores.csv").string());
    idx << "video_id,index,max\n";
    for (const auto& m : maps) {
        write_map(out / m.video_id / frame_file_name(m.index), m);
        const float mx = m.values.empty() ? 0.0f : *std::max_element(m.values.begin(), m.values.end());
        idx << m.video_id << ',' << m.index << ',' << format_score(mx) << '\n';
    }
}

inline std::vector<MapRecord> read_score_index(const fs::path& maps_dir) {
    std::ifstream is(maps_dir / "scores.csv");
    if (!is) throw InputError("missing " + (maps_dir / "scores.csv").string());
    std::string line;
    std::getline(is, line);
    if (line != "video_id,index,max") throw FormatError("unexpected header in scores.csv");
    std::vector<MapRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MapRecord r;
        std::string idx, mx;
        if (!std::getline(ls, r.video_id, ',') || !std::getline(ls, idx, ',') || !std::getline(ls, mx))
            throw FormatError("malformed scores.csv line: " + line);
        try {
            r.index = std::stoi(idx);
            r.max_score = std::stod(mx);
        } catch (const std::exception&) {
            throw FormatError("malformed scores.csv line: " + line);
        }
        out.push_back(std::move(r));
    }
    if (out.empty()) throw InputError("scores.csv lists no maps");
    return out;
}

inline std::vector<AbnormalityMap> read_maps(const fs::path& maps_dir) {
    std::vector<AbnormalityMap> maps;
    for (const auto& r : read_score_index(maps_dir))
        maps.push_back(read_map(maps_dir / r.video_id / frame_file_name(r.index), r.index, r.video_id));
    return maps;
}

/// Ground truth for each map from <gt_root>/<video_id>/gt/%06d.png; frames
/// without a mask file are normal. Masks are resized to the map size.
inline std::vector<GroundTruth> read_truth_for(const fs::path& gt_root, const std::vector<AbnormalityMap>& maps) {
    std::vector<GroundTruth> out;
    out.reserve(maps.size());
    for (const auto& m : maps) {
        const fs::path p = gt_root / m.video_id / "gt" / frame_file_name(m.index);
        if (!fs::exists(p)) {
            if (!fs::is_directory(gt_root / m.video_id)) throw InputError("no ground truth for video " + m.video_id);
            out.push_back(GroundTruth::normal());
            continue;
        }
        out.push_back(GroundTruth::from_mask(resize_mask(read_mask(p), m.values.height(), m.values.width())));
    }
    return out;
}

}  // namespace crossgan
