#pragma once

// Run configuration. Files use a flat TOML subset:
//
//   # comment
//   resolution = 64
//   [train]
//   epochs = 10          # becomes key "train.epochs"
//   optimizer = "adam"
//
// Defaults < file < command-line flags. Unknown keys and out-of-range values
// are rejected with a ConfigError naming the key.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crossgan/dataset_io.hpp"
#include "crossgan/detection.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/gan_training.hpp"
#include "crossgan/optical_flow.hpp"
#include "crossgan/synthetic_data.hpp"

namespace crossgan {

using KeyValues = std::map<std::string, std::string>;

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace config_detail

inline KeyValues parse_key_values(const std::string& text) {
    using namespace config_detail;
    KeyValues kv;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (!section.empty()) key = section + "." + key;
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_key_values(ss.str());
}

namespace config_detail {

template <typename V>
V parse_number(const std::string& key, const std::string& text) {
    V v{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
    return v;
}

/// Applies recognised keys through setters; everything left over is unknown.
class Binder {
public:
    explicit Binder(const KeyValues& kv) : kv_(kv) {}

    template <typename V>
    void number(const std::string& key, V& target) {
        if (auto it = kv_.find(key); it != kv_.end()) {
            target = parse_number<V>(key, it->second);
            used_.push_back(key);
        }
    }
    template <typename Fn>
    void text(const std::string& key, Fn&& apply) {
        if (auto it = kv_.find(key); it != kv_.end()) {
            try {
                apply(it->second);
            } catch (const ConfigError& e) {
                throw ConfigError("key '" + key + "': " + e.what());
            }
            used_.push_back(key);
        }
    }
    void reject_unknown() const {
        for (const auto& [k, v] : kv_)
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) throw ConfigError("unknown config key '" + k + "'");
    }

private:
    const KeyValues& kv_;
    std::vector<std::string> used_;
};

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("key '" + key + "': " + what);
}

}  // namespace config_detail

enum class DetectMode { Discriminator, Generator, DiscriminatorAppearance, DiscriminatorMotion };

inline std::string to_string(DetectMode m) {
    switch (m) {
        case DetectMode::Discriminator: return "discriminator";
        case DetectMode::Generator: return "generator";
        case DetectMode::DiscriminatorAppearance: return "disc-f";
        case DetectMode::DiscriminatorMotion: return "disc-o";
    }
    return "discriminator";
}

inline DetectMode parse_detect_mode(const std::string& s) {
    if (s == "discriminator") return DetectMode::Discriminator;
    if (s == "generator") return DetectMode::Generator;
    if (s == "disc-f") return DetectMode::DiscriminatorAppearance;
    if (s == "disc-o") return DetectMode::DiscriminatorMotion;
    throw ConfigError("mode must be discriminator, generator, disc-f or disc-o, got '" + s + "'");
}

struct RunConfig {
    int resolution = kDefaultResolution;
    FlowConfig flow;
    FlowSource flow_source = FlowSource::Computed;
    TrainConfig train;
    DetectMode mode = DetectMode::Discriminator;
    int jobs = 1;

    double motion_epsilon() const { return flow.motion_epsilon; }

    /// Keys accepted in config files (flags use the same names).
    static std::vector<std::string> keys() {
        return {"resolution",          "base_filters",          "seed",
                "jobs",                "motion_epsilon",        "flow.source",
                "flow.pyramid_levels", "flow.iterations_per_level", "flow.warps_per_level",
                "flow.smoothness_weight", "flow.support_radius", "flow.change_threshold",
                "flow.max_displacement", "train.epochs",
                "train.batch_size",    "train.optimizer",       "train.momentum",
                "train.learning_rate", "train.lambda",          "detect.mode"};
    }

    void validate() const {
        using config_detail::require;
        require(resolution >= 32 && (resolution & (resolution - 1)) == 0, "resolution",
                "must be a power of two >= 32, got " + std::to_string(resolution));
        require(jobs >= 1, "jobs", "must be >= 1");
        require(flow.pyramid_levels >= 1, "flow.pyramid_levels", "must be >= 1");
        require(flow.iterations_per_level >= 1, "flow.iterations_per_level", "must be >= 1");
        require(flow.warps_per_level >= 1, "flow.warps_per_level", "must be >= 1");
        require(flow.smoothness_weight > 0, "flow.smoothness_weight", "must be positive");
        require(flow.support_radius >= 0, "flow.support_radius", "must be >= 0");
        require(flow.change_threshold >= 0, "flow.change_threshold", "must be >= 0");
        require(flow.encoding.max_displacement > 0, "flow.max_displacement", "must be positive");
        require(flow.motion_epsilon > 0, "motion_epsilon", "must be positive");
        require(train.epochs >= 1, "train.epochs", "must be >= 1, got " + std::to_string(train.epochs));
        require(train.batch_size >= 1, "train.batch_size", "must be >= 1");
        require(train.momentum >= 0 && train.momentum < 1, "train.momentum", "must be in [0,1)");
        require(train.learning_rate > 0, "train.learning_rate", "must be positive");
        require(train.l1_weight >= 0, "train.lambda", "must be nonnegative");
        require(train.base_filters >= 1, "base_filters", "must be >= 1");
    }

    /// Applies `kv` on top of the current values.
    void merge(const KeyValues& kv) {
        config_detail::Binder b(kv);
        b.number("resolution", resolution);
        b.number("base_filters", train.base_filters);
        b.number("seed", train.seed);
        b.number("jobs", jobs);
        b.number("motion_epsilon", flow.motion_epsilon);
        b.text("flow.source", [&](const std::string& s) { flow_source = parse_flow_source(s); });
        b.number("flow.pyramid_levels", flow.pyramid_levels);
        b.number("flow.iterations_per_level", flow.iterations_per_level);
        b.number("flow.warps_per_level", flow.warps_per_level);
        b.number("flow.smoothness_weight", flow.smoothness_weight);
        b.number("flow.support_radius", flow.support_radius);
        b.number("flow.change_threshold", flow.change_threshold);
        b.number("flow.max_displacement", flow.encoding.max_displacement);
        b.number("train.epochs", train.epochs);
        b.number("train.batch_size", train.batch_size);
        b.text("train.optimizer", [&](const std::string& s) { train.optimizer = nn::parse_optimizer(s); });
        b.number("train.momentum", train.momentum);
        b.number("train.learning_rate", train.learning_rate);
        b.number("train.lambda", train.l1_weight);
        b.text("detect.mode", [&](const std::string& s) { mode = parse_detect_mode(s); });
        b.reject_unknown();
        train.resolution = resolution;
    }
};

/// Defaults, then the file (if any), then flag overrides; validated.
inline RunConfig parse_config(const KeyValues& file_values, const KeyValues& flag_values = {}) {
    RunConfig cfg;
    cfg.merge(file_values);
    cfg.merge(flag_values);
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_file(const std::filesystem::path& path, const KeyValues& flag_values = {}) {
    return parse_config(read_key_values(path), flag_values);
}

/// Scene description for `synth`. Keys may appear bare or under [scene].
inline SceneSpec parse_scene_spec(const KeyValues& raw) {
    KeyValues kv;
    for (const auto& [k, v] : raw) kv[k.rfind("scene.", 0) == 0 ? k.substr(6) : k] = v;
    SceneSpec s;
    config_detail::Binder b(kv);
    b.number("resolution", s.resolution);
    b.number("agent_count", s.agent_count);
    b.number("agent_size", s.agent_size);
    b.number("normal_speed", s.normal_speed);
    b.text("anomaly_kind", [&](const std::string& v) { s.anomaly_kind = parse_anomaly_kind(v); });
    b.number("anomaly_speed_multiplier", s.anomaly_speed_multiplier);
    b.number("frames_per_video", s.frames_per_video);
    b.number("train_videos", s.train_videos);
    b.number("test_videos", s.test_videos);
    b.number("seed", s.seed);
    b.reject_unknown();
    if (s.frames_per_video < 1) throw ConfigError("key 'frames_per_video': must be >= 1");
    s.validate();
    return s;
}

}  // namespace crossgan
