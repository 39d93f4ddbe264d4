#pragma once

// U-Net generator for the cross-channel translation tasks. The encoder halves
// the spatial size at every stage down to a 1x1 bottleneck (at the default
// stage count), the decoder mirrors it, and decoder stage k receives the
// encoder output of the symmetric stage through a skip connection. Dropout in
// the innermost decoder stages is the only source of noise.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"
#include "crossgan/nn/layers.hpp"
#include "crossgan/nn/params.hpp"
#include "crossgan/rng.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan {

/// Number of generator forward passes performed process-wide. Used to verify
/// that discriminator-only code paths never touch a generator.
inline std::atomic<std::uint64_t> generator_forward_calls{0};

struct GeneratorConfig {
    static constexpr int kMaxStages = 8;

    int resolution = 256;
    /// 0 selects log2(resolution) capped at kMaxStages.
    int stages = 0;
    int base_filters = 64;
    double dropout_rate = 0.5;
    int dropout_stages = 3;
    int channels = 3;

    int stage_count() const {
        if (stages > 0) return stages;
        if (resolution <= 1) return 1;
        return std::min(kMaxStages, static_cast<int>(std::bit_width(static_cast<unsigned>(resolution))) - 1);
    }

    /// Filters produced by encoder stage k: base * 2^k, capped at base * 8.
    int filters(int stage) const { return base_filters * std::min(1 << std::min(stage, 3), 8); }

    int bottleneck_size() const { return resolution >> stage_count(); }

    void validate() const {
        const int n = stage_count();
        if (resolution <= 0 || !std::has_single_bit(static_cast<unsigned>(resolution)))
            throw ConfigError("generator resolution must be a power of two, got " + std::to_string(resolution));
        if (n < 2) throw ConfigError("generator needs at least 2 stages");
        if (n > 30 || resolution < (1 << n))
            throw ConfigError("generator resolution " + std::to_string(resolution) + " cannot be halved " +
                              std::to_string(n) + " times");
        if (base_filters <= 0) throw ConfigError("generator base_filters must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("generator dropout_rate must be in [0,1)");
        if (dropout_stages < 0) throw ConfigError("generator dropout_stages must be nonnegative");
    }

    bool operator==(const GeneratorConfig&) const = default;
};

template <typename T>
struct GeneratorTape {
    std::vector<Tensor<T>> encoder_out;
    std::vector<nn::ConvCache<T>> encoder_conv;
    std::vector<nn::NormCache<T>> encoder_norm;
    std::vector<nn::ConvTransposeCache<T>> decoder_conv;
    std::vector<nn::NormCache<T>> decoder_norm;
    std::vector<std::vector<T>> decoder_mask;
    Tensor<T> tanh_out;
};

template <typename T>
class UNetGenerator {
public:
    static constexpr T kLeakySlope = T(0.2);

    UNetGenerator() = default;

    explicit UNetGenerator(const GeneratorConfig& config) : config_(config) {
        config_.validate();
        const int n = config_.stage_count();
        encoder_conv_.resize(n);
        encoder_norm_.resize(n);
        decoder_conv_.resize(n);
        decoder_norm_.resize(n);
        for (int k = 0; k < n; ++k) {
            const int in = k == 0 ? config_.channels : config_.filters(k - 1);
            encoder_conv_[k] = nn::Conv2d<T>(params_, "enc" + std::to_string(k) + ".conv", {in, config_.filters(k)});
            if (has_encoder_norm(k))
                encoder_norm_[k] = nn::InstanceNorm<T>(params_, "enc" + std::to_string(k) + ".norm", config_.filters(k));
        }
        for (int k = n - 1; k >= 0; --k) {
            const int in = k == n - 1 ? config_.filters(n - 1) : 2 * config_.filters(k);
            const int out = k == 0 ? config_.channels : config_.filters(k - 1);
            decoder_conv_[k] = nn::ConvTranspose2d<T>(params_, "dec" + std::to_string(k) + ".deconv", {in, out});
            if (k > 0) decoder_norm_[k] = nn::InstanceNorm<T>(params_, "dec" + std::to_string(k) + ".norm", out);
        }
    }

    const GeneratorConfig& config() const { return config_; }
    nn::ParamSet<T>& params() { return params_; }
    const nn::ParamSet<T>& params() const { return params_; }

    /// Maps a unit-range image to a unit-range image of the same size. Dropout
    /// is active only when `noise_seed` is given. `tape`, when non-null,
    /// receives everything backward() needs.
    Tensor<T> forward(const Tensor<T>& x, std::optional<std::uint64_t> noise_seed = std::nullopt,
                      GeneratorTape<T>* tape = nullptr) const {
        check_input(x);
        generator_forward_calls.fetch_add(1, std::memory_order_relaxed);
        const int n = config_.stage_count();
        std::optional<Rng> rng;
        if (noise_seed) rng.emplace(*noise_seed);
        if (tape) {
            tape->encoder_out.assign(n, {});
            tape->encoder_conv.assign(n, {});
            tape->encoder_norm.assign(n, {});
            tape->decoder_conv.assign(n, {});
            tape->decoder_norm.assign(n, {});
            tape->decoder_mask.assign(n, {});
        }

        Tensor<T> h = x;
        for (auto& v : h) v = T(2) * v - T(1);

        std::vector<Tensor<T>> enc(n);
        for (int k = 0; k < n; ++k) {
            Tensor<T> a = k == 0 ? std::move(h) : nn::leaky_relu(enc[k - 1], kLeakySlope);
            Tensor<T> c = encoder_conv_[k].forward(params_, a, tape ? &tape->encoder_conv[k] : nullptr);
            enc[k] = has_encoder_norm(k)
                         ? encoder_norm_[k].forward(params_, c, tape ? &tape->encoder_norm[k] : nullptr)
                         : std::move(c);
        }

        Tensor<T> d;
        for (int k = n - 1; k >= 0; --k) {
            Tensor<T> u = k == n - 1 ? enc[k] : concat_channels(d, enc[k]);
            Tensor<T> a = nn::leaky_relu(u, T(0));
            Tensor<T> c = decoder_conv_[k].forward(params_, a, tape ? &tape->decoder_conv[k] : nullptr);
            if (k == 0) {
                d = nn::tanh(c);
                break;
            }
            d = decoder_norm_[k].forward(params_, c, tape ? &tape->decoder_norm[k] : nullptr);
            if (rng && has_dropout(k)) d = nn::dropout(d, config_.dropout_rate, *rng, tape ? &tape->decoder_mask[k] : nullptr);
        }

        if (tape) {
            tape->encoder_out = std::move(enc);
            tape->tanh_out = d;
        }
        for (auto& v : d) v = (v + T(1)) / T(2);
        return d;
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the unit-range output) and
    /// accumulates parameter gradients into `grads`.
    void backward(const GeneratorTape<T>& tape, const Tensor<T>& grad_out, nn::ParamSet<T>& grads) const {
        const int n = config_.stage_count();
        Tensor<T> g = grad_out;
        for (auto& v : g) v /= T(2);
        g = nn::tanh_backward(tape.tanh_out, g);

        std::vector<Tensor<T>> enc_grad(n);
        for (int k = 0; k < n; ++k) {
            const auto& e = tape.encoder_out[k];
            enc_grad[k] = Tensor<T>(e.channels(), e.height(), e.width());
        }

        // decoder, outermost stage first
        for (int k = 0; k < n; ++k) {
            if (k > 0) {
                if (!tape.decoder_mask[k].empty()) g = nn::dropout_backward(tape.decoder_mask[k], g);
                g = decoder_norm_[k].backward(params_, tape.decoder_norm[k], g, &grads);
            }
            Tensor<T> du = decoder_conv_[k].backward(params_, tape.decoder_conv[k], g, &grads);
            const Tensor<T>& a = tape.decoder_conv[k].input;
            for (std::size_t i = 0; i < du.size(); ++i)
                if (!(a[i] > T(0))) du[i] = T(0);
            if (k == n - 1) {
                add_into(enc_grad[k], du);
            } else {
                auto [d_dec, d_skip] = split_channels(du, config_.filters(k));
                add_into(enc_grad[k], d_skip);
                g = std::move(d_dec);
            }
        }

        // encoder, innermost stage first
        for (int k = n - 1; k >= 0; --k) {
            Tensor<T> gc = has_encoder_norm(k) ? encoder_norm_[k].backward(params_, tape.encoder_norm[k], enc_grad[k], &grads)
                                               : std::move(enc_grad[k]);
            Tensor<T> da = encoder_conv_[k].backward(params_, tape.encoder_conv[k], gc, &grads, k > 0);
            if (k > 0) add_into(enc_grad[k - 1], nn::leaky_relu_backward(tape.encoder_out[k - 1], da, kLeakySlope));
        }
    }

private:
    bool has_encoder_norm(int k) const { return k > 0 && k < config_.stage_count() - 1; }
    bool has_dropout(int k) const {
        const int n = config_.stage_count();
        return k >= 1 && k >= n - config_.dropout_stages && config_.dropout_rate > 0.0;
    }

    void check_input(const Tensor<T>& x) const {
        if (x.channels() != config_.channels || x.height() != config_.resolution || x.width() != config_.resolution)
            throw InputError("generator expects " + std::to_string(config_.channels) + "x" +
                             std::to_string(config_.resolution) + "x" + std::to_string(config_.resolution) +
                             " input, got " + x.shape_string());
    }

    static void add_into(Tensor<T>& dst, const Tensor<T>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    GeneratorConfig config_;
    nn::ParamSet<T> params_;
    std::vector<nn::Conv2d<T>> encoder_conv_;
    std::vector<nn::InstanceNorm<T>> encoder_norm_;
    std::vector<nn::ConvTranspose2d<T>> decoder_conv_;
    std::vector<nn::InstanceNorm<T>> decoder_norm_;
};

}  // namespace crossgan

namespace crossgan {

/// Gaussian initialization shared by both networks: convolution weights
/// N(0, 0.02), normalization scales N(1, 0.02), biases and shifts zero.
template <typename T>
void init_gaussian(nn::ParamSet<T>& params, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : params) {
        const std::string& name = p.name;
        auto ends_with = [&](std::string_view suffix) {
            return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
        };
        if (ends_with(".weight"))
            nn::init_normal(p, rng, 0.0, 0.02);
        else if (ends_with(".gamma"))
            nn::init_normal(p, rng, 1.0, 0.02);
        else
            std::fill(p.values.begin(), p.values.end(), T(0));
    }
}

/// Builds and initializes a generator. `stages` = 0 picks the default plan.
template <typename T = float>
UNetGenerator<T> init_generator(std::uint64_t seed, int resolution, int base_filters, int stages = 0) {
    GeneratorConfig cfg;
    cfg.resolution = resolution;
    cfg.base_filters = base_filters;
    cfg.stages = stages;
    UNetGenerator<T> g(cfg);
    init_gaussian(g.params(), seed);
    return g;
}

}  // namespace crossgan
