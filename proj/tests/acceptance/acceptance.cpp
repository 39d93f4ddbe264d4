// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "crossgan/crossgan.hpp"

using namespace crossgan;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

template <typename T = float>
Tensor<T> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor<T> t(c, h, w);
    for (auto& v : t) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double den = std::max(std::sqrt(na), std::sqrt(nb));
    return den < 1e-12 ? std::sqrt(d) : std::sqrt(d) / den;
}

/// Worst per-tensor relative error between analytic and central-difference gradients.
double worst_param_error(nn::ParamSet<double>& params, const nn::ParamSet<double>& analytic,
                         const std::function<double()>& loss) {
    double worst = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& v = params[k].values;
        std::vector<double> num(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double keep = v[i];
            v[i] = keep + 1e-6;
            const double up = loss();
            v[i] = keep - 1e-6;
            const double down = loss();
            v[i] = keep;
            num[i] = (up - down) / 2e-6;
        }
        worst = std::max(worst, rel_error({analytic[k].values.begin(), analytic[k].values.end()}, num));
    }
    return worst;
}

// ---------------------------------------------------------------- 1

Outcome architecture() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto g = init_generator<float>(1, 256, 64);
    const auto x = random_tensor(3, 256, 256, 2);
    const auto y = g.forward(x);
    o.require(y.channels() == 3 && y.height() == 256 && y.width() == 256, "generator shape " + y.shape_string());

    const auto d = init_discriminator<float>(3, 256, 64);
    const auto cond = random_tensor(3, 256, 256, 4);
    const auto base = d.score_grid(cond, x);
    o.require(base.height() == 30 && base.width() == 30, "grid " + base.shape_string());
    const auto& c = d.config();
    o.require(c.receptive_field() == 70, "receptive field " + std::to_string(c.receptive_field()));

    const int rf = c.receptive_field(), off = c.receptive_field_offset(), st = c.cell_stride();
    double worst_outside = 0;
    bool inside_moves = true;
    const int probes[][2] = {{0, 0}, {255, 255}, {128, 40}, {60, 200}};
    for (const auto& p : probes) {
        auto pert = x;
        for (int ch = 0; ch < 3; ++ch) pert(ch, p[0], p[1]) = 1.0f - pert(ch, p[0], p[1]);
        const auto grid = d.score_grid(cond, pert);
        bool any_inside_changed = false;
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 30; ++j) {
                const int y0 = off + st * i, x0 = off + st * j;
                const bool inside = p[0] >= y0 && p[0] < y0 + rf && p[1] >= x0 && p[1] < x0 + rf;
                const double delta = std::abs(grid(0, i, j) - base(0, i, j));
                if (inside)
                    any_inside_changed = any_inside_changed || delta > 0;
                else
                    worst_outside = std::max(worst_outside, delta);
            }
        inside_moves = inside_moves && any_inside_changed;
    }
    o.require(worst_outside < 1e-7, "out-of-patch change " + fmt("%.3g", worst_outside));
    o.require(inside_moves, "in-patch perturbation had no effect");
    const double secs = seconds_since(t0);
    o.require(secs < 60, "runtime " + fmt("%.1f s", secs));
    o.note("G 256x256x3 -> " + y.shape_string() + ", D grid " + std::to_string(base.height()) + "x" +
           std::to_string(base.width()) + ", RF 70, max out-of-patch delta " + fmt("%.1e", worst_outside) + ", " +
           fmt("%.1f s", secs));
    return o;
}

// ---------------------------------------------------------------- 2

Outcome losses() {
    Outcome o;
    const double dl = discriminator_loss(0.5, 0.5);
    o.require(std::abs(dl - 2 * std::numbers::ln2) <= 1e-9, "discriminator_loss(0.5,0.5) = " + fmt("%.12f", dl));

    double worst_l1 = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto a = random_tensor(3, 16, 16, 2 * s), b = random_tensor(3, 16, 16, 2 * s + 1);
        double sum = 0;
        for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(double(a[i]) - double(b[i]));
        worst_l1 = std::max(worst_l1, std::abs(l1_loss(a, b) - sum / a.size()));
    }
    o.require(worst_l1 <= 1e-7, "l1 oracle gap " + fmt("%.3g", worst_l1));

    auto g = init_generator<double>(5, 8, 4, 2);
    const auto x = random_tensor<double>(3, 8, 8, 6), w = random_tensor<double>(3, 8, 8, 7, -1, 1);
    GeneratorTape<double> tape;
    g.forward(x, std::nullopt, &tape);
    auto gg = g.params().zeros_like();
    g.backward(tape, w, gg);
    const double g_err = worst_param_error(g.params(), gg, [&] {
        const auto out = g.forward(x);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
        return s;
    });

    auto d = init_discriminator<double>(8, 8, 4, 1);
    const auto real = random_tensor<double>(3, 8, 8, 9), fake = random_tensor<double>(3, 8, 8, 10);
    DiscriminatorTape<double> rt, ft;
    const double dr = d.score_scalar(x, real, &rt), df = d.score_scalar(x, fake, &ft);
    auto dg = d.params().zeros_like();
    d.backward_scalar(rt, discriminator_loss_grad_real(dr), &dg);
    d.backward_scalar(ft, discriminator_loss_grad_fake(df), &dg);
    const double d_err = worst_param_error(d.params(), dg, [&] {
        return discriminator_loss(d.score_scalar(x, real), d.score_scalar(x, fake));
    });

    auto g2 = init_generator<double>(11, 8, 4, 2);
    const auto d2 = init_discriminator<double>(12, 8, 4, 1);
    const auto target = random_tensor<double>(3, 8, 8, 13);
    const auto total = generator_gradients(g2, d2, x, target, std::nullopt).total(100.0);
    const double obj_err = worst_param_error(g2.params(), total, [&] {
        const auto out = g2.forward(x);
        return generator_adversarial_loss(d2.score_scalar(x, out)) + 100.0 * l1_loss(target, out);
    });

    o.require(g_err <= 1e-3, "generator gradient error " + fmt("%.3g", g_err));
    o.require(d_err <= 1e-3, "discriminator gradient error " + fmt("%.3g", d_err));
    o.require(obj_err <= 1e-3, "generator objective gradient error " + fmt("%.3g", obj_err));
    o.note("2log2 gap " + fmt("%.1e", std::abs(dl - 2 * std::numbers::ln2)) + ", l1 gap " + fmt("%.1e", worst_l1) +
           ", grad rel err G " + fmt("%.1e", g_err) + " D " + fmt("%.1e", d_err) + " G-objective " +
           fmt("%.1e", obj_err));
    return o;
}

// ---------------------------------------------------------------- 3

Outcome pipeline_oracles() {
    Outcome o;
    const auto t0 = Clock::now();
    TrainConfig tc;
    tc.resolution = 32;
    tc.base_filters = 4;
    const auto fo = init_task(Direction::FrameToFlow, tc);
    const auto of = init_task(Direction::FlowToFrame, tc);
    double e_norm = 0, e_fuse = 0, e_mask = 0;
    bool bounds_ok = true;

    for (std::uint64_t vid = 0; vid < 20; ++vid) {
        SceneSpec spec;
        spec.resolution = 32;
        spec.agent_size = 6;
        spec.frames_per_video = 6;
        spec.seed = 100 + vid;
        const auto video = vid % 2 ? generate_abnormal_video(spec) : generate_normal_video(spec);
        std::vector<FlowImage> flows;
        for (std::size_t t = 0; t + 1 < video.frames.size(); ++t)
            flows.push_back(compute_flow(video.frames[t], video.frames[t + 1]));

        std::vector<ScoreMap> sf, so, fused;
        for (std::size_t t = 0; t < flows.size(); ++t) {
            auto [a, m] = frame_score_maps(fo, of, video.frames[t], flows[t]);
            sf.push_back(a);
            so.push_back(m);
            fused.push_back(fuse(a, m));
            for (std::size_t i = 0; i < a.grid.size(); ++i)
                e_fuse = std::max(e_fuse, std::abs(double(fused.back().grid[i]) - (double(a.grid[i]) + m.grid[i])));
        }
        const auto norm = normalize_video(fused);
        double mx = 0;
        for (std::size_t t = 0; t < sf.size(); ++t)
            for (std::size_t i = 0; i < sf[t].grid.size(); ++i) mx = std::max(mx, double(sf[t].grid[i]) + so[t].grid[i]);
        for (std::size_t t = 0; t < sf.size(); ++t)
            for (std::size_t i = 0; i < sf[t].grid.size(); ++i)
                e_norm = std::max(e_norm, std::abs(norm.grids[t].grid[i] - (double(sf[t].grid[i]) + so[t].grid[i]) / mx));

        for (std::size_t t = 0; t < flows.size(); ++t) {
            const auto& g = norm.grids[t].grid;
            const auto up = upsample_grid(g, 32, 32);
            const float lo = *std::min_element(g.begin(), g.end()), hi = *std::max_element(g.begin(), g.end());
            for (float v : up) bounds_ok = bounds_ok && v >= lo - 1e-6f && v <= hi + 1e-6f;
            const auto a = abnormality_map(up, flows[t], 0.1);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    const double mag = std::hypot(double(flows[t].raw_u(0, y, x)), double(flows[t].raw_v(0, y, x)));
                    const double expect = mag > 0.1 ? 1.0 - up(0, y, x) : 0.0;
                    e_mask = std::max(e_mask, std::abs(a.values(0, y, x) - expect));
                }
        }
    }
    o.require(e_fuse <= 1e-6, "fusion gap " + fmt("%.3g", e_fuse));
    o.require(e_norm <= 1e-6, "normalization gap " + fmt("%.3g", e_norm));
    o.require(bounds_ok, "upsampling left the grid range");
    o.require(e_mask <= 1e-6, "masking gap " + fmt("%.3g", e_mask));
    const double secs = seconds_since(t0);
    o.require(secs < 60, "runtime " + fmt("%.1f s", secs));
    o.note("20 videos: fusion " + fmt("%.1e", e_fuse) + ", normalization " + fmt("%.1e", e_norm) + ", masking " +
           fmt("%.1e", e_mask) + ", upsample in range, " + fmt("%.1f s", secs));
    return o;
}

// ---------------------------------------------------------------- 4

Outcome metric_oracles() {
    Outcome o;
    double worst_auc = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(trial);
        std::vector<double> s(100);
        std::vector<bool> l(100);
        for (int i = 0; i < 100; ++i) {
            l[i] = i < 2 ? i == 0 : rng.uniform() < 0.5;
            s[i] = std::round((rng.uniform() + (l[i] ? 0.25 : 0.0)) * 40) / 40;
        }
        double wins = 0, pairs = 0;
        for (int i = 0; i < 100; ++i)
            for (int j = 0; j < 100; ++j)
                if (l[i] && !l[j]) {
                    pairs += 1;
                    wins += s[i] > s[j] ? 1 : (s[i] == s[j] ? 0.5 : 0);
                }
        worst_auc = std::max(worst_auc, std::abs(auc(roc_from_scores(s, l)) - wins / pairs));
    }
    o.require(worst_auc <= 1e-6, "AUC vs rank statistic " + fmt("%.3g", worst_auc));

    RocCurve c;
    c.points = {{1.0, 0.0, 0.0, 0}, {0.7, 0.5, 0.1, 0}, {0.4, 0.8, 0.4, 0}, {0.0, 1.0, 1.0, 0}};
    // line through (0.1,0.5),(0.4,0.8) meets fpr = 1 - tpr at fpr = 0.3
    const double e = eer(c);
    o.require(e == 0.3 || std::abs(e - 0.3) <= 4 * std::numeric_limits<double>::epsilon(), "EER " + fmt("%.17g", e));

    bool frame_ok = true, pixel_ok = true;
    for (std::uint64_t trial = 0; trial < 30; ++trial) {
        Rng rng(1000 + trial);
        std::vector<AbnormalityMap> maps;
        std::vector<GroundTruth> gts;
        std::vector<bool> labels;
        for (int i = 0; i < 10; ++i) {
            AbnormalityMap m{Tensor<float>(1, 8, 8), "v", i};
            for (auto& v : m.values) v = rng.uniform() < 0.4 ? static_cast<float>(rng.uniform()) : 0.0f;
            maps.push_back(m);
            const bool abnormal = i < 2 ? i == 0 : rng.uniform() < 0.5;
            labels.push_back(abnormal);
            if (abnormal) {
                Mask mask(1, 8, 8);
                const int y0 = static_cast<int>(rng.below(6)), x0 = static_cast<int>(rng.below(6));
                for (int y = y0; y < y0 + 3; ++y)
                    for (int x = x0; x < x0 + 2; ++x) mask(0, y, x) = 1;
                gts.push_back(GroundTruth::from_mask(mask));
            } else {
                gts.push_back(GroundTruth::normal());
            }
        }
        const auto fc = frame_level_eval(maps, labels);
        const auto pc = pixel_level_eval(maps, gts);
        const double pos = std::count(labels.begin(), labels.end(), true), neg = 10 - pos;
        for (const auto& p : fc.points) {
            double tp = 0, fp = 0;
            for (int i = 0; i < 10; ++i) {
                bool fire = false;
                for (float v : maps[i].values) fire = fire || v >= p.threshold;
                if (fire) (labels[i] ? tp : fp) += 1;
            }
            frame_ok = frame_ok && p.tpr == tp / pos && p.fpr == fp / neg;
        }
        for (const auto& p : pc.points) {
            double tp = 0, fp = 0;
            for (int i = 0; i < 10; ++i) {
                std::size_t hit = 0, area = 0;
                bool fire = false;
                for (std::size_t k = 0; k < 64; ++k) {
                    const bool f = maps[i].values[k] >= p.threshold;
                    fire = fire || f;
                    if (labels[i] && (*gts[i].pixel_mask)[k]) {
                        ++area;
                        hit += f;
                    }
                }
                if (!labels[i])
                    fp += fire;
                else if (10 * hit >= 4 * area)
                    tp += 1;
            }
            pixel_ok = pixel_ok && p.tpr == tp / pos && p.fpr == fp / neg;
        }
    }
    o.require(frame_ok, "frame-level protocol differs from brute force");
    o.require(pixel_ok, "pixel-level protocol differs from brute force");
    o.note("AUC gap " + fmt("%.1e", worst_auc) + ", EER " + fmt("%.6f", e) + " (expected 0.3), frame/pixel protocols " +
           "match brute force on 30 ten-frame instances");
    return o;
}

// ---------------------------------------------------------------- 5 + 6

struct EndToEnd {
    double seconds = 0;
    double auc_fused = 0, eer_fused = 0;
    double auc_app = 0, auc_mot = 0, auc_gen = 0;
    std::size_t train_pairs = 0, test_frames = 0, abnormal_frames = 0;
};

/// Training settings for the desk-scale run.
TrainConfig desk_config() {
    TrainConfig tc;
    tc.resolution = 64;
    tc.epochs = 10;
    tc.base_filters = 32;
    tc.optimizer = nn::OptimizerKind::Adam;
    tc.seed = 1;
    return tc;
}

EndToEnd run_end_to_end() {
    EndToEnd r;
    const auto t0 = Clock::now();
    const SceneSpec spec;  // defaults: 64 px, 2 x 200 training frames, 2 abnormal test videos
    const auto data = generate_dataset(spec);
    const FlowConfig fc;
    auto flows_of = [&](const SyntheticVideo& v) {
        std::vector<FlowImage> f;
        for (std::size_t t = 0; t + 1 < v.frames.size(); ++t) f.push_back(compute_flow(v.frames[t], v.frames[t + 1], fc));
        return f;
    };
    std::vector<PairedSample> fo_pairs, of_pairs;
    for (const auto& v : data.train) {
        const auto flows = flows_of(v);
        auto a = build_pairs(v.frames, flows, Direction::FrameToFlow);
        auto b = build_pairs(v.frames, flows, Direction::FlowToFrame);
        fo_pairs.insert(fo_pairs.end(), a.begin(), a.end());
        of_pairs.insert(of_pairs.end(), b.begin(), b.end());
    }
    r.train_pairs = fo_pairs.size();
    const TrainConfig tc = desk_config();
    const auto fo = train_task(fo_pairs, tc);
    const auto of = train_task(of_pairs, tc);

    std::vector<double> fused, app, mot, gen;
    std::vector<bool> labels;
    for (const auto& v : data.test) {
        const auto flows = flows_of(v);
        const auto m = detect_video(fo, of, v.frames, flows);
        const auto ma = single_channel_map(of, SingleChannel::Appearance, v.frames, flows);
        const auto mm = single_channel_map(fo, SingleChannel::Motion, v.frames, flows);
        const auto mg = detect_video_generator(fo, of, v.frames, flows);
        for (std::size_t t = 0; t < m.size(); ++t) {
            labels.push_back(v.truth[t].abnormal);
            r.abnormal_frames += v.truth[t].abnormal;
        }
        for (double s : map_maxima(m)) fused.push_back(s);
        for (double s : map_maxima(ma)) app.push_back(s);
        for (double s : map_maxima(mm)) mot.push_back(s);
        for (double s : map_maxima(mg)) gen.push_back(s);
    }
    r.test_frames = labels.size();
    const auto curve = roc_from_scores(fused, labels, default_thresholds(fused));
    r.auc_fused = auc(curve);
    r.eer_fused = eer(curve);
    r.auc_app = auc(roc_from_scores(app, labels, default_thresholds(app)));
    r.auc_mot = auc(roc_from_scores(mot, labels, default_thresholds(mot)));
    r.auc_gen = auc(roc_from_scores(gen, labels, default_thresholds(gen)));
    r.seconds = seconds_since(t0);
    return r;
}

Outcome detection(const EndToEnd& r) {
    Outcome o;
    o.require(r.auc_fused >= 0.85, "AUC " + fmt("%.4f", r.auc_fused));
    o.require(r.eer_fused <= 0.25, "EER " + fmt("%.4f", r.eer_fused));
    o.require(r.seconds <= 1800, "runtime " + fmt("%.0f s", r.seconds));
    o.note("frame-level AUC " + fmt("%.4f", r.auc_fused) + ", EER " + fmt("%.2f%%", 100 * r.eer_fused) + ", " +
           std::to_string(r.train_pairs) + " training pairs per task, " + std::to_string(r.test_frames) +
           " test frames (" + std::to_string(r.abnormal_frames) + " abnormal), " + fmt("%.0f s", r.seconds));
    return o;
}

Outcome ablation(const EndToEnd& r) {
    Outcome o;
    const double best_single = std::max(r.auc_app, r.auc_mot);
    o.require(r.auc_fused >= best_single - 0.05, "fused " + fmt("%.4f", r.auc_fused) + " vs best single " +
                                                     fmt("%.4f", best_single));
    o.require(r.auc_gen >= 0.75, "generator baseline AUC " + fmt("%.4f", r.auc_gen));
    o.note("AUC fused " + fmt("%.4f", r.auc_fused) + ", appearance-only " + fmt("%.4f", r.auc_app) +
           ", motion-only " + fmt("%.4f", r.auc_mot) + ", generator baseline " + fmt("%.4f", r.auc_gen));
    return o;
}

// ---------------------------------------------------------------- 7

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    std::size_t other = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
    if (rel.size() != other) return false;
    for (const auto& r : rel) {
        if (!fs::exists(b / r) || read_bytes(a / r) != read_bytes(b / r)) return false;
        ++files;
    }
    return true;
}

Outcome determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "crossgan_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream spec(root / "spec.toml");
        spec << "resolution = 32\nagent_size = 6\nframes_per_video = 24\ntrain_videos = 1\ntest_videos = 1\nseed = 7\n";
    }
    const std::string cli = CROSSGAN_CLI;
    for (const char* run_name : {"a", "b"}) {
        const fs::path out = root / run_name;
        const std::string common = " --resolution 32 --epochs 2 --base-filters 4 --seed 3 --optimizer adam --log " +
                                   (out / "log").string();
        bool ok = run(cli + " synth --spec " + (root / "spec.toml").string() + " --out " + (out / "data").string()) == 0;
        ok = ok && run(cli + " train --direction f2o --data " + (out / "data/train").string() + " --out " +
                       (out / "ckpt/f2o.ckpt").string() + common + "_f2o.csv") == 0;
        ok = ok && run(cli + " train --direction o2f --data " + (out / "data/train").string() + " --out " +
                       (out / "ckpt/o2f.ckpt").string() + common + "_o2f.csv") == 0;
        ok = ok && run(cli + " detect --ckpt-f2o " + (out / "ckpt/f2o.ckpt").string() + " --ckpt-o2f " +
                       (out / "ckpt/o2f.ckpt").string() + " --data " + (out / "data/test").string() + " --out " +
                       (out / "maps").string()) == 0;
        ok = ok && run(cli + " eval --maps " + (out / "maps").string() + " --gt " + (out / "data/test").string() +
                       " --protocol frame --out " + (out / "report/frame.json").string()) == 0;
        ok = ok && run(cli + " eval --maps " + (out / "maps").string() + " --gt " + (out / "data/test").string() +
                       " --protocol pixel --out " + (out / "report/pixel.json").string()) == 0;
        o.require(ok, std::string("CLI pipeline run ") + run_name + " failed");
    }
    if (!o.pass) return o;
    std::size_t files = 0;
    for (const char* sub : {"ckpt", "maps", "report", "data"})
        o.require(same_tree(root / "a" / sub, root / "b" / sub, files), std::string(sub) + " differ between runs");
    o.note(std::to_string(files) + " files byte-identical across two synth/train/detect/eval runs");
    return o;
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("%s  criterion %d  %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto guarded = [&](int id, const char* name, const std::function<Outcome()>& f) {
        try {
            report(id, name, f());
        } catch (const std::exception& e) {
            report(id, name, Outcome{false, std::string("exception: ") + e.what()});
        }
    };
    guarded(1, "architecture conformance", architecture);
    guarded(2, "loss correctness", losses);
    guarded(3, "pipeline oracle equivalence", pipeline_oracles);
    guarded(4, "metric oracle equivalence", metric_oracles);
    try {
        const EndToEnd r = run_end_to_end();
        report(5, "end-to-end desk-scale detection", detection(r));
        report(6, "ablation trend", ablation(r));
    } catch (const std::exception& e) {
        report(5, "end-to-end desk-scale detection", Outcome{false, std::string("exception: ") + e.what()});
        report(6, "ablation trend", Outcome{false, "not run"});
    }
    guarded(7, "determinism", determinism);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
