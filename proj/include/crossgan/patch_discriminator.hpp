#pragma once

// PatchGAN discriminator: five 4x4 convolutions over the channel-wise
// concatenation of (condition, candidate). The first three stages have
// stride 2, the last two stride 1, giving a 30x30 logit grid with a 70x70
// receptive field at 256x256. No normalization layers are used, so every
// grid cell depends only on its own input patch.

#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "crossgan/errors.hpp"
#include "crossgan/nn/layers.hpp"
#include "crossgan/nn/params.hpp"
#include "crossgan/tensor.hpp"
#include "crossgan/unet_generator.hpp"

namespace crossgan {

struct DiscriminatorConfig {
    int resolution = 256;
    int base_filters = 64;
    /// Stride-2 stages; two stride-1 stages always follow. 3 is the standard plan.
    int downsampling_stages = 3;
    int image_channels = 3;

    int stage_count() const { return downsampling_stages + 2; }

    std::vector<nn::ConvSpec> plan() const {
        std::vector<nn::ConvSpec> specs;
        int in = 2 * image_channels;
        for (int i = 0; i <= downsampling_stages; ++i) {
            const int out = base_filters * (1 << std::min(i, 3));
            specs.push_back({in, out, 4, i < downsampling_stages ? 2 : 1, 1});
            in = out;
        }
        specs.push_back({in, 1, 4, 1, 1});
        return specs;
    }

    int grid_size() const {
        int s = resolution;
        for (const auto& spec : plan()) s = spec.conv_output(s);
        return s;
    }

    /// Side of the input window seen by one grid cell.
    int receptive_field() const {
        int rf = 1;
        const auto specs = plan();
        for (auto it = specs.rbegin(); it != specs.rend(); ++it) rf = (rf - 1) * it->stride + it->kernel;
        return rf;
    }

    /// Total stride between neighbouring grid cells, in input pixels.
    int cell_stride() const { return 1 << downsampling_stages; }

    /// Input coordinate of the first pixel of cell 0's receptive field.
    int receptive_field_offset() const {
        int offset = 0, jump = 1;
        for (const auto& spec : plan()) {
            offset -= spec.pad * jump;
            jump *= spec.stride;
        }
        return offset;
    }

    void validate() const {
        if (resolution <= 0 || !std::has_single_bit(static_cast<unsigned>(resolution)))
            throw ConfigError("discriminator resolution must be a power of two, got " + std::to_string(resolution));
        if (downsampling_stages < 1 || base_filters <= 0) throw ConfigError("invalid discriminator stage plan");
        if (resolution % (1 << downsampling_stages) != 0 || grid_size() < 1)
            throw ConfigError("discriminator does not support resolution " + std::to_string(resolution));
    }

    bool operator==(const DiscriminatorConfig&) const = default;
};

template <typename T>
struct DiscriminatorTape {
    std::vector<nn::ConvCache<T>> conv;
    std::vector<Tensor<T>> pre_activation;
    Tensor<T> probabilities;
};

template <typename T>
class PatchDiscriminator {
public:
    static constexpr T kLeakySlope = T(0.2);

    PatchDiscriminator() = default;
    explicit PatchDiscriminator(const DiscriminatorConfig& config) : config_(config) {
        config_.validate();
        const auto specs = config_.plan();
        for (std::size_t i = 0; i < specs.size(); ++i)
            conv_.emplace_back(params_, "stage" + std::to_string(i) + ".conv", specs[i]);
    }

    const DiscriminatorConfig& config() const { return config_; }
    nn::ParamSet<T>& params() { return params_; }
    const nn::ParamSet<T>& params() const { return params_; }

    /// Patch realness probabilities (1 x g x g) for the pair (condition, candidate).
    Tensor<T> score_grid(const Tensor<T>& condition, const Tensor<T>& candidate,
                         DiscriminatorTape<T>* tape = nullptr) const {
        check_input(condition, "condition");
        check_input(candidate, "candidate");
        Tensor<T> h = concat_channels(condition, candidate);
        for (auto& v : h) v = T(2) * v - T(1);
        const std::size_t n = conv_.size();
        if (tape) {
            tape->conv.assign(n, {});
            tape->pre_activation.assign(n, {});
        }
        for (std::size_t i = 0; i < n; ++i) {
            Tensor<T> z = conv_[i].forward(params_, h, tape ? &tape->conv[i] : nullptr);
            if (i + 1 == n) {
                h = std::move(z);
                break;
            }
            h = nn::leaky_relu(z, kLeakySlope);
            if (tape) tape->pre_activation[i] = std::move(z);
        }
        for (auto& v : h) v = nn::sigmoid(v);
        if (tape) tape->probabilities = h;
        return h;
    }

    /// Mean of the probability grid.
    T score_scalar(const Tensor<T>& condition, const Tensor<T>& candidate, DiscriminatorTape<T>* tape = nullptr) const {
        return grid_mean(score_grid(condition, candidate, tape));
    }

    static T grid_mean(const Tensor<T>& grid) {
        double s = 0.0;
        for (T v : grid) s += v;
        return static_cast<T>(s / static_cast<double>(grid.size()));
    }

    /// Backpropagates a gradient w.r.t. the probability grid. Parameter
    /// gradients are accumulated into `grads` when non-null; the gradient
    /// w.r.t. the unit-range candidate image is returned when requested.
    Tensor<T> backward(const DiscriminatorTape<T>& tape, const Tensor<T>& grad_grid, nn::ParamSet<T>* grads,
                       bool candidate_grad = false) const {
        Tensor<T> g = grad_grid;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const T p = tape.probabilities[i];
            g[i] *= p * (T(1) - p);
        }
        const std::size_t n = conv_.size();
        for (std::size_t i = n; i-- > 0;) {
            const bool need_input = i > 0 || candidate_grad;
            Tensor<T> dx = conv_[i].backward(params_, tape.conv[i], g, grads, need_input);
            if (i == 0) {
                if (!candidate_grad) return {};
                auto [d_cond, d_cand] = split_channels(dx, config_.image_channels);
                for (auto& v : d_cand) v *= T(2);
                return d_cand;
            }
            g = nn::leaky_relu_backward(tape.pre_activation[i - 1], dx, kLeakySlope);
        }
        return {};
    }

    /// Convenience: backward for a loss defined on score_scalar, given dLoss/dscalar.
    Tensor<T> backward_scalar(const DiscriminatorTape<T>& tape, T grad_scalar, nn::ParamSet<T>* grads,
                              bool candidate_grad = false) const {
        const auto& p = tape.probabilities;
        Tensor<T> g(p.channels(), p.height(), p.width(), grad_scalar / static_cast<T>(p.size()));
        return backward(tape, g, grads, candidate_grad);
    }

private:
    void check_input(const Tensor<T>& x, const char* what) const {
        if (x.channels() != config_.image_channels || x.height() != config_.resolution ||
            x.width() != config_.resolution)
            throw InputError(std::string("discriminator ") + what + " must be " +
                             std::to_string(config_.image_channels) + "x" + std::to_string(config_.resolution) + "x" +
                             std::to_string(config_.resolution) + ", got " + x.shape_string());
    }

    DiscriminatorConfig config_;
    nn::ParamSet<T> params_;
    std::vector<nn::Conv2d<T>> conv_;
};

template <typename T = float>
PatchDiscriminator<T> init_discriminator(std::uint64_t seed, int resolution, int base_filters = 64,
                                         int downsampling_stages = 3) {
    DiscriminatorConfig cfg;
    cfg.resolution = resolution;
    cfg.base_filters = base_filters;
    cfg.downsampling_stages = downsampling_stages;
    PatchDiscriminator<T> d(cfg);
    init_gaussian(d.params(), seed);
    return d;
}

}  // namespace crossgan
