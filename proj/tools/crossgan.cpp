// crossgan command-line entry point: synth, train, detect, eval, render.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crossgan/crossgan.hpp"

namespace fs = std::filesystem;
using namespace crossgan;

namespace {

/// Collects flag values that were actually given, keyed like config files.
struct Overrides {
    std::map<std::string, std::string> slots;  // node-stable storage bound to CLI11
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        options.emplace_back(key, app->add_option(flag, slots[key], help));
    }
    KeyValues collect() const {
        KeyValues kv;
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) kv[key] = slots.at(key);
        return kv;
    }
};

RunConfig load_run_config(const std::string& config_path, const Overrides& flags) {
    const KeyValues file = config_path.empty() ? KeyValues{} : read_key_values(config_path);
    return parse_config(file, flags.collect());
}

LoadOptions load_options(const RunConfig& cfg) {
    LoadOptions o;
    o.resolution = cfg.resolution;
    o.flow_source = cfg.flow_source;
    o.flow = cfg.flow;
    o.jobs = cfg.jobs;
    return o;
}

// ---------------------------------------------------------------- synth

int run_synth(const std::string& spec_path, const fs::path& out) {
    const SceneSpec spec = parse_scene_spec(spec_path.empty() ? KeyValues{} : read_key_values(spec_path));
    const SyntheticDataset data = generate_dataset(spec);
    for (const auto& v : data.train) write_video(out / "train", v.id, v.frames, v.truth);
    for (const auto& v : data.test) write_video(out / "test", v.id, v.frames, v.truth);
    std::cerr << "wrote " << data.train.size() << " training and " << data.test.size() << " test videos to "
              << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

int run_train(const std::string& direction_name, const fs::path& data, const fs::path& out,
              const std::string& log_path, const RunConfig& cfg) {
    const Direction direction = parse_direction(direction_name);
    const auto videos = load_dataset(data, load_options(cfg));
    std::vector<PairedSample> pairs;
    for (const auto& v : videos) {
        for (const auto& gt : v.truth)
            if (gt.abnormal) throw InputError("training video " + v.id + " contains abnormal frames");
        auto p = build_pairs(v.frames, v.flows, direction);
        pairs.insert(pairs.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }

    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::binary);
        if (!log_file) throw InputError("cannot write " + log_path);
    }
    std::ostream& log = log_path.empty() ? std::cout : log_file;
    log << "iter,l1,d_loss,g_adv\n";
    const std::size_t per_epoch = pairs.size();
    const TrainedTask task = train_task(pairs, cfg.train, [&](int epoch, std::size_t it, const LossRecord& r) {
        char line[160];
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g\n", it, r.l1, r.d_loss, r.g_adv);
        log << line;
        if ((it + 1) % per_epoch == 0) std::cerr << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " done\n";
    });
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_checkpoint(out, task);
    return 0;
}

// ---------------------------------------------------------------- detect

int run_detect(const std::string& ckpt_fo, const std::string& ckpt_of, const fs::path& data, const fs::path& out,
               const std::string& config_path, const Overrides& flags) {
    KeyValues flag_values = flags.collect();
    const KeyValues file = config_path.empty() ? KeyValues{} : read_key_values(config_path);
    RunConfig cfg = parse_config(file, flag_values);
    const bool resolution_given = file.count("resolution") || flag_values.count("resolution");

    std::optional<TrainedTask> fo, of;
    const auto expected = resolution_given ? std::optional<int>(cfg.resolution) : std::nullopt;
    if (cfg.mode != DetectMode::DiscriminatorAppearance) {
        if (ckpt_fo.empty()) throw ConfigError("--ckpt-f2o is required for mode " + to_string(cfg.mode));
        fo = load_checkpoint(ckpt_fo, expected);
    }
    if (cfg.mode != DetectMode::DiscriminatorMotion) {
        if (ckpt_of.empty()) throw ConfigError("--ckpt-o2f is required for mode " + to_string(cfg.mode));
        of = load_checkpoint(ckpt_of, expected);
    }
    const TrainedTask& any = fo ? *fo : *of;
    if (!resolution_given) cfg.resolution = any.resolution();
    if (fo) check_task(*fo, Direction::FrameToFlow, cfg.resolution);
    if (of) check_task(*of, Direction::FlowToFrame, cfg.resolution);

    DetectOptions opt;
    opt.motion_epsilon = cfg.motion_epsilon();
    opt.jobs = cfg.jobs;
    std::vector<AbnormalityMap> all;
    for (const auto& dir : list_videos(data)) {
        const VideoData v = load_video(dir, load_options(cfg));
        std::vector<AbnormalityMap> maps;
        switch (cfg.mode) {
            case DetectMode::Discriminator: maps = detect_video(*fo, *of, v.frames, v.flows, opt); break;
            case DetectMode::Generator: maps = detect_video_generator(*fo, *of, v.frames, v.flows, opt); break;
            case DetectMode::DiscriminatorAppearance:
                maps = single_channel_map(*of, SingleChannel::Appearance, v.frames, v.flows, opt);
                break;
            case DetectMode::DiscriminatorMotion:
                maps = single_channel_map(*fo, SingleChannel::Motion, v.frames, v.flows, opt);
                break;
        }
        all.insert(all.end(), std::make_move_iterator(maps.begin()), std::make_move_iterator(maps.end()));
        std::cerr << "detected " << v.id << "\n";
    }
    write_maps(out, all);
    return 0;
}

// ---------------------------------------------------------------- eval

int run_eval(const fs::path& maps_dir, const fs::path& gt_root, const std::string& protocol, const fs::path& out) {
    const auto maps = read_maps(maps_dir);
    const auto truth = read_truth_for(gt_root, maps);
    RocCurve curve;
    if (protocol == "frame") {
        std::vector<bool> labels;
        for (const auto& g : truth) labels.push_back(g.abnormal);
        curve = frame_level_eval(maps, labels);
    } else if (protocol == "pixel") {
        curve = pixel_level_eval(maps, truth);
    } else {
        throw ConfigError("protocol must be frame or pixel, got '" + protocol + "'");
    }
    std::size_t abnormal = 0;
    for (const auto& g : truth) abnormal += g.abnormal;

    nlohmann::ordered_json report;
    report["protocol"] = protocol;
    report["frames"] = maps.size();
    report["abnormal_frames"] = abnormal;
    report["auc"] = auc(curve);
    report["eer"] = eer(curve);
    report["eer_percent"] = 100.0 * eer(curve);
    auto& roc = report["roc"] = nlohmann::ordered_json::array();
    for (const auto& p : curve.points)
        roc.push_back({{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}, {"mislocalized", p.mislocalized}});
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    std::ofstream os(out, std::ios::binary);
    if (!os) throw InputError("cannot write " + out.string());
    os << report.dump(2) << "\n";
    std::printf("%s-level AUC %.4f  EER %.2f%%\n", protocol.c_str(), auc(curve), 100.0 * eer(curve));
    return 0;
}

// ---------------------------------------------------------------- render

int run_render(const fs::path& maps_dir, const fs::path& data, const fs::path& out) {
    fs::create_directories(out);
    for (const auto& r : read_score_index(maps_dir)) {
        const AbnormalityMap map = read_map(maps_dir / r.video_id / frame_file_name(r.index), r.index, r.video_id);
        const fs::path frame_path = data / r.video_id / "frames" / frame_file_name(r.index);
        const Frame frame = rescale_frame(read_image(frame_path), map.values.height(), r.index, r.video_id);
        write_image(out / r.video_id / frame_file_name(r.index), render_heatmap(map, frame));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-channel adversarial video anomaly detection"};
    app.require_subcommand(1);

    std::string spec_path, out, data, direction, log_path, config_path, ckpt_fo, ckpt_of, maps, gt, protocol;

    auto* synth = app.add_subcommand("synth", "Generate the synthetic crowd dataset");
    synth->add_option("--spec", spec_path, "Scene spec (key = value file)");
    synth->add_option("--out", out, "Output dataset root")->required();

    auto* train = app.add_subcommand("train", "Train one cross-channel GAN");
    train->add_option("--direction", direction, "f2o or o2f")->required();
    train->add_option("--data", data, "Dataset root of normal videos")->required();
    train->add_option("--out", out, "Checkpoint path")->required();
    train->add_option("--log", log_path, "Loss log CSV (default: stdout)");
    train->add_option("--config", config_path, "Run config file");
    Overrides train_flags;
    train_flags.add(train, "--epochs", "train.epochs", "Training epochs");
    train_flags.add(train, "--lr", "train.learning_rate", "Learning rate");
    train_flags.add(train, "--lambda", "train.lambda", "L1 weight");
    train_flags.add(train, "--seed", "seed", "Seed");
    train_flags.add(train, "--resolution", "resolution", "Working resolution");
    train_flags.add(train, "--optimizer", "train.optimizer", "momentum or adam");
    train_flags.add(train, "--momentum", "train.momentum", "Momentum / first-moment decay");
    train_flags.add(train, "--batch-size", "train.batch_size", "Batch size");
    train_flags.add(train, "--base-filters", "base_filters", "Filters in the first layer");
    train_flags.add(train, "--flow", "flow.source", "computed or precomputed");
    train_flags.add(train, "--jobs", "jobs", "Worker threads for flow");

    auto* detect = app.add_subcommand("detect", "Write abnormality maps for every video");
    detect->add_option("--ckpt-f2o", ckpt_fo, "Frame-to-flow checkpoint");
    detect->add_option("--ckpt-o2f", ckpt_of, "Flow-to-frame checkpoint");
    detect->add_option("--data", data, "Dataset root")->required();
    detect->add_option("--out", out, "Output map directory")->required();
    detect->add_option("--config", config_path, "Run config file");
    Overrides detect_flags;
    detect_flags.add(detect, "--mode", "detect.mode", "discriminator, generator, disc-f or disc-o");
    detect_flags.add(detect, "--resolution", "resolution", "Working resolution");
    detect_flags.add(detect, "--motion-epsilon", "motion_epsilon", "Motion gate in px/frame");
    detect_flags.add(detect, "--flow", "flow.source", "computed or precomputed");
    detect_flags.add(detect, "--jobs", "jobs", "Worker threads");

    auto* eval = app.add_subcommand("eval", "Score maps against ground truth");
    eval->add_option("--maps", maps, "Map directory from detect")->required();
    eval->add_option("--gt", gt, "Dataset root holding <video>/gt masks")->required();
    eval->add_option("--protocol", protocol, "frame or pixel")->required();
    eval->add_option("--out", out, "Report JSON path")->required();

    auto* render = app.add_subcommand("render", "Overlay maps on frames as heat-maps");
    render->add_option("--maps", maps, "Map directory from detect")->required();
    render->add_option("--data", data, "Dataset root")->required();
    render->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(spec_path, out);
        if (train->parsed()) return run_train(direction, data, out, log_path, load_run_config(config_path, train_flags));
        if (detect->parsed()) return run_detect(ckpt_fo, ckpt_of, data, out, config_path, detect_flags);
        if (eval->parsed()) return run_eval(maps, gt, protocol, out);
        if (render->parsed()) return run_render(maps, data, out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
