#pragma once

// Adversarial training of one cross-channel task (frame -> flow or
// flow -> frame). Each step updates the discriminator once on the pair
// (real, generated) and then the generator once on the non-saturating
// adversarial loss plus the weighted L1 reconstruction loss.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/losses.hpp"
#include "crossgan/nn/optim.hpp"
#include "crossgan/patch_discriminator.hpp"
#include "crossgan/rng.hpp"
#include "crossgan/unet_generator.hpp"

namespace crossgan {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 1;
    nn::OptimizerKind optimizer = nn::OptimizerKind::Momentum;
    /// Classical momentum, or the first-moment decay for adaptive moments.
    double momentum = 0.5;
    double learning_rate = 2e-4;
    /// Weight of the L1 reconstruction term.
    double l1_weight = 100.0;
    std::uint64_t seed = 0;
    int resolution = kDefaultResolution;
    int base_filters = 64;

    void validate() const {
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1, got " + std::to_string(epochs));
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1, got " + std::to_string(batch_size));
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must be in [0,1)");
        if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
        if (!(l1_weight >= 0.0)) throw ConfigError("train.lambda must be nonnegative");
        if (base_filters < 1) throw ConfigError("base_filters must be >= 1");
    }
};

struct LossRecord {
    double l1 = 0.0;
    double d_loss = 0.0;
    double g_adv = 0.0;

    bool operator==(const LossRecord&) const = default;
};

/// A trained (or in-training) network pair N^{F->O} or N^{O->F}.
struct TrainedTask {
    Direction direction = Direction::FrameToFlow;
    UNetGenerator<float> generator;
    PatchDiscriminator<float> discriminator;
    std::vector<LossRecord> loss_history;

    int resolution() const { return generator.config().resolution; }
};

/// Fresh networks for one task, seeded deterministically from cfg.seed.
inline TrainedTask init_task(Direction direction, const TrainConfig& cfg) {
    TrainedTask t;
    t.direction = direction;
    t.generator = init_generator<float>(derive_seed(cfg.seed, 1), cfg.resolution, cfg.base_filters);
    t.discriminator = init_discriminator<float>(derive_seed(cfg.seed, 2), cfg.resolution, cfg.base_filters);
    return t;
}

/// Gradient of the generator objective -log D(x, G(x)) + lambda * L1(y, G(x))
/// for one sample, split into its two terms so each can be inspected.
template <typename T>
struct GeneratorGradients {
    nn::ParamSet<T> adversarial;
    nn::ParamSet<T> reconstruction;
    double d_fake = 0.0;
    double g_adv = 0.0;
    double l1 = 0.0;

    nn::ParamSet<T> total(double l1_weight) const {
        nn::ParamSet<T> out = adversarial;
        for (std::size_t k = 0; k < out.size(); ++k)
            for (std::size_t i = 0; i < out[k].values.size(); ++i)
                out[k].values[i] += static_cast<T>(l1_weight) * reconstruction[k].values[i];
        return out;
    }
};

template <typename T>
GeneratorGradients<T> generator_gradients(const UNetGenerator<T>& g, const PatchDiscriminator<T>& d,
                                          const Tensor<T>& x, const Tensor<T>& y,
                                          std::optional<std::uint64_t> noise_seed) {
    GeneratorTape<T> tape;
    const Tensor<T> fake = g.forward(x, noise_seed, &tape);
    DiscriminatorTape<T> dt;
    GeneratorGradients<T> out;
    out.d_fake = d.score_scalar(x, fake, &dt);
    out.g_adv = generator_adversarial_loss(out.d_fake);
    out.l1 = l1_loss(y, fake);
    const Tensor<T> d_adv =
        d.backward_scalar(dt, static_cast<T>(generator_adversarial_loss_grad(out.d_fake)), nullptr, true);
    out.adversarial = g.params().zeros_like();
    g.backward(tape, d_adv, out.adversarial);
    out.reconstruction = g.params().zeros_like();
    g.backward(tape, l1_loss_gradient(y, fake), out.reconstruction);
    return out;
}

/// Mutable training state for one task.
class TaskTrainer {
public:
    TaskTrainer(TrainedTask task, const TrainConfig& cfg)
        : task_(std::move(task)), cfg_(cfg),
          g_opt_(cfg.optimizer, cfg.learning_rate, cfg.momentum),
          d_opt_(cfg.optimizer, cfg.learning_rate, cfg.momentum) {
        cfg_.validate();
    }

    const TrainedTask& task() const { return task_; }
    TrainedTask release() { return std::move(task_); }
    std::uint64_t steps() const { return steps_; }

    /// One update of D followed by one update of G over `batch` (gradients
    /// are averaged over the batch). Returns one loss record per sample.
    std::vector<LossRecord> train_step(std::span<const PairedSample> batch) {
        if (batch.empty()) throw InputError("train_step: empty batch");
        for (const auto& s : batch)
            if (s.direction != task_.direction)
                throw InputError("train_step: sample direction " + to_string(s.direction) + " does not match task " +
                                 to_string(task_.direction));
        const auto& g = task_.generator;
        auto& d = task_.discriminator;
        const float inv_b = 1.0f / static_cast<float>(batch.size());

        std::vector<GeneratorTape<float>> g_tapes(batch.size());
        std::vector<Image> fakes(batch.size());
        std::vector<LossRecord> records(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i)
            fakes[i] = g.forward(batch[i].input, derive_seed(cfg_.seed, 1'000'000 + steps_ * batch.size() + i), &g_tapes[i]);

        // discriminator update
        auto d_grads = d.params().zeros_like();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            DiscriminatorTape<float> real_tape, fake_tape;
            const double d_real = d.score_scalar(batch[i].input, batch[i].target, &real_tape);
            const double d_fake = d.score_scalar(batch[i].input, fakes[i], &fake_tape);
            records[i].d_loss = discriminator_loss(d_real, d_fake);
            d.backward_scalar(real_tape, static_cast<float>(discriminator_loss_grad_real(d_real)) * inv_b, &d_grads);
            d.backward_scalar(fake_tape, static_cast<float>(discriminator_loss_grad_fake(d_fake)) * inv_b, &d_grads);
        }
        d_opt_.step(d.params(), d_grads);

        // generator update against the refreshed discriminator
        auto g_grads = task_.generator.params().zeros_like();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            DiscriminatorTape<float> tape;
            const double d_fake = d.score_scalar(batch[i].input, fakes[i], &tape);
            records[i].g_adv = generator_adversarial_loss(d_fake);
            records[i].l1 = l1_loss(batch[i].target, fakes[i]);
            Image grad = d.backward_scalar(tape, static_cast<float>(generator_adversarial_loss_grad(d_fake)) * inv_b,
                                           nullptr, true);
            if (cfg_.l1_weight != 0.0) {
                const Image l1_grad = l1_loss_gradient(batch[i].target, fakes[i]);
                const float w = static_cast<float>(cfg_.l1_weight) * inv_b;
                for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += w * l1_grad[k];
            }
            g.backward(g_tapes[i], grad, g_grads);
        }
        g_opt_.step(task_.generator.params(), g_grads);

        ++steps_;
        task_.loss_history.insert(task_.loss_history.end(), records.begin(), records.end());
        return records;
    }

private:
    TrainedTask task_;
    TrainConfig cfg_;
    nn::Optimizer<float> g_opt_;
    nn::Optimizer<float> d_opt_;
    std::uint64_t steps_ = 0;
};

/// Number of train_step calls a full run performs: epochs * ceil(samples / batch).
inline std::size_t train_step_count(std::size_t samples, const TrainConfig& cfg) {
    const auto b = static_cast<std::size_t>(cfg.batch_size);
    return static_cast<std::size_t>(cfg.epochs) * ((samples + b - 1) / b);
}

using TrainProgress = std::function<void(int epoch, std::size_t iteration, const LossRecord&)>;

/// Full training run: `cfg.epochs` passes over `pairs` in a seeded shuffled
/// order. `pairs` must come from normal-only footage and share a direction.
inline TrainedTask train_task(const std::vector<PairedSample>& pairs, const TrainConfig& cfg,
                              const TrainProgress& progress = {}) {
    cfg.validate();
    if (pairs.empty()) throw InputError("train_task: no training pairs");
    const Direction direction = pairs.front().direction;
    for (const auto& p : pairs) {
        if (p.direction != direction) throw InputError("train_task: pairs mix both directions");
        if (p.input.height() != cfg.resolution || p.input.width() != cfg.resolution)
            throw InputError("train_task: sample " + p.video_id + "/" + std::to_string(p.index) + " is " +
                             p.input.shape_string() + ", expected resolution " + std::to_string(cfg.resolution));
    }

    TaskTrainer trainer(init_task(direction, cfg), cfg);
    std::vector<std::size_t> order(pairs.size());
    std::size_t iteration = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<PairedSample> batch;
            for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
            for (const auto& r : trainer.train_step(batch))
                if (progress) progress(epoch, iteration++, r);
        }
    }
    return trainer.release();
}

}  // namespace crossgan
