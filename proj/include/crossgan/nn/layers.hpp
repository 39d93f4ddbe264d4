#pragma once

// Building blocks for the convolutional networks: strided convolution,
// transposed convolution, instance normalization, pointwise activations and
// dropout. Every layer is stateless apart from the indices of its parameters;
// forward() optionally records what backward() needs into a cache object.
// Convolutions are lowered to GEMM through im2col / col2im.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "crossgan/nn/params.hpp"
#include "crossgan/rng.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using VectorMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 4;
    int stride = 2;
    int pad = 1;

    /// Spatial output size of the forward convolution for an input of size `in`.
    int conv_output(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
    /// Spatial output size of the transposed convolution for an input of size `in`.
    int transposed_output(int in) const { return (in - 1) * stride - 2 * pad + kernel; }
};

/// Unfolds `in` (C x H x W) into a (C*k*k) x (Ho*Wo) row-major matrix.
template <typename T>
void im2col(const T* in, int channels, int height, int width, const ConvSpec& g, int out_h, int out_w, T* cols) {
    const int k = g.kernel;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        const T* src = in + static_cast<std::size_t>(c) * height * width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * out_plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    T* dst = row + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= height) {
                        std::fill(dst, dst + out_w, T(0));
                        continue;
                    }
                    const T* src_row = src + static_cast<std::size_t>(iy) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        dst[ox] = (ix >= 0 && ix < width) ? src_row[ix] : T(0);
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: accumulates columns back into an image (C x H x W).
template <typename T>
void col2im(const T* cols, int channels, int height, int width, const ConvSpec& g, int out_h, int out_w, T* out) {
    const int k = g.kernel;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        T* dst = out + static_cast<std::size_t>(c) * height * width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * out_plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= height) continue;
                    const T* src = row + static_cast<std::size_t>(oy) * out_w;
                    T* dst_row = dst + static_cast<std::size_t>(iy) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < width) dst_row[ix] += src[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
struct ConvCache {
    Buffer<T> cols;
    int in_height = 0;
    int in_width = 0;
};

/// Strided 2-D convolution. Weight layout: [out][in][k][k].
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(ParamSet<T>& params, const std::string& name, ConvSpec spec) : spec_(spec) {
        weight_ = params.add(name + ".weight", {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
        bias_ = params.add(name + ".bias", {spec.out_channels});
    }

    const ConvSpec& spec() const { return spec_; }
    std::size_t weight_index() const { return weight_; }
    std::size_t bias_index() const { return bias_; }

    Tensor<T> forward(const ParamSet<T>& params, const Tensor<T>& x, ConvCache<T>* cache = nullptr) const {
        if (x.channels() != spec_.in_channels)
            throw InputError("Conv2d: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                             std::to_string(x.channels()));
        const int oh = spec_.conv_output(x.height());
        const int ow = spec_.conv_output(x.width());
        if (oh <= 0 || ow <= 0) throw InputError("Conv2d: input " + x.shape_string() + " too small");
        const int rows = spec_.in_channels * spec_.kernel * spec_.kernel;
        const int cols_n = oh * ow;
        Buffer<T> local;
        Buffer<T>& cols = cache ? cache->cols : local;
        cols.resize(static_cast<std::size_t>(rows) * cols_n);
        im2col(x.data(), x.channels(), x.height(), x.width(), spec_, oh, ow, cols.data());

        Tensor<T> y(spec_.out_channels, oh, ow);
        ConstMatrixMap<T> w(params[weight_].values.data(), spec_.out_channels, rows);
        ConstMatrixMap<T> c(cols.data(), rows, cols_n);
        MatrixMap<T> out(y.data(), spec_.out_channels, cols_n);
        out.noalias() = w * c;
        ConstVectorMap<T> b(params[bias_].values.data(), spec_.out_channels);
        out.colwise() += b;
        if (cache) {
            cache->in_height = x.height();
            cache->in_width = x.width();
        }
        return y;
    }

    /// Accumulates parameter gradients into `grads` (when non-null) and returns
    /// the gradient with respect to the input (empty when `input_grad` is false).
    Tensor<T> backward(const ParamSet<T>& params, const ConvCache<T>& cache, const Tensor<T>& grad_out,
                       ParamSet<T>* grads, bool input_grad = true) const {
        const int rows = spec_.in_channels * spec_.kernel * spec_.kernel;
        const int cols_n = grad_out.height() * grad_out.width();
        ConstMatrixMap<T> dy(grad_out.data(), spec_.out_channels, cols_n);
        if (grads) {
            ConstMatrixMap<T> c(cache.cols.data(), rows, cols_n);
            MatrixMap<T> dw((*grads)[weight_].values.data(), spec_.out_channels, rows);
            dw.noalias() += dy * c.transpose();
            VectorMap<T> db((*grads)[bias_].values.data(), spec_.out_channels);
            db += dy.rowwise().sum();
        }
        if (!input_grad) return {};
        ConstMatrixMap<T> w(params[weight_].values.data(), spec_.out_channels, rows);
        Buffer<T> dcols(static_cast<std::size_t>(rows) * cols_n);
        MatrixMap<T> dc(dcols.data(), rows, cols_n);
        dc.noalias() = w.transpose() * dy;
        Tensor<T> dx(spec_.in_channels, cache.in_height, cache.in_width);
        col2im(dcols.data(), spec_.in_channels, cache.in_height, cache.in_width, spec_, grad_out.height(),
               grad_out.width(), dx.data());
        return dx;
    }

private:
    ConvSpec spec_;
    std::size_t weight_ = 0;
    std::size_t bias_ = 0;
};

template <typename T>
struct ConvTransposeCache {
    Tensor<T> input;
};

/// Transposed convolution (fractionally strided upsampling). Weight layout:
/// [in][out][k][k], i.e. the adjoint of a Conv2d from `out` to `in` channels.
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(ParamSet<T>& params, const std::string& name, ConvSpec spec) : spec_(spec) {
        weight_ = params.add(name + ".weight", {spec.in_channels, spec.out_channels, spec.kernel, spec.kernel});
        bias_ = params.add(name + ".bias", {spec.out_channels});
    }

    const ConvSpec& spec() const { return spec_; }
    std::size_t weight_index() const { return weight_; }
    std::size_t bias_index() const { return bias_; }

    Tensor<T> forward(const ParamSet<T>& params, const Tensor<T>& x, ConvTransposeCache<T>* cache = nullptr) const {
        if (x.channels() != spec_.in_channels)
            throw InputError("ConvTranspose2d: expected " + std::to_string(spec_.in_channels) +
                             " input channels, got " + std::to_string(x.channels()));
        const int oh = spec_.transposed_output(x.height());
        const int ow = spec_.transposed_output(x.width());
        const int rows = spec_.out_channels * spec_.kernel * spec_.kernel;
        const int cols_n = x.height() * x.width();
        ConstMatrixMap<T> w(params[weight_].values.data(), spec_.in_channels, rows);
        ConstMatrixMap<T> in(x.data(), spec_.in_channels, cols_n);
        Buffer<T> cols(static_cast<std::size_t>(rows) * cols_n);
        MatrixMap<T> c(cols.data(), rows, cols_n);
        c.noalias() = w.transpose() * in;
        Tensor<T> y(spec_.out_channels, oh, ow);
        col2im(cols.data(), spec_.out_channels, oh, ow, spec_, x.height(), x.width(), y.data());
        const auto& b = params[bias_].values;
        for (int ch = 0; ch < spec_.out_channels; ++ch)
            for (auto& v : y.plane(ch)) v += b[ch];
        if (cache) cache->input = x;
        return y;
    }

    Tensor<T> backward(const ParamSet<T>& params, const ConvTransposeCache<T>& cache, const Tensor<T>& grad_out,
                       ParamSet<T>* grads, bool input_grad = true) const {
        const Tensor<T>& x = cache.input;
        const int rows = spec_.out_channels * spec_.kernel * spec_.kernel;
        const int cols_n = x.height() * x.width();
        Buffer<T> dcols(static_cast<std::size_t>(rows) * cols_n);
        im2col(grad_out.data(), spec_.out_channels, grad_out.height(), grad_out.width(), spec_, x.height(),
               x.width(), dcols.data());
        ConstMatrixMap<T> dc(dcols.data(), rows, cols_n);
        if (grads) {
            ConstMatrixMap<T> in(x.data(), spec_.in_channels, cols_n);
            MatrixMap<T> dw((*grads)[weight_].values.data(), spec_.in_channels, rows);
            dw.noalias() += in * dc.transpose();
            auto& db = (*grads)[bias_].values;
            for (int ch = 0; ch < spec_.out_channels; ++ch) {
                T s = 0;
                for (T v : grad_out.plane(ch)) s += v;
                db[ch] += s;
            }
        }
        if (!input_grad) return {};
        ConstMatrixMap<T> w(params[weight_].values.data(), spec_.in_channels, rows);
        Tensor<T> dx(spec_.in_channels, x.height(), x.width());
        MatrixMap<T> dxm(dx.data(), spec_.in_channels, cols_n);
        dxm.noalias() = w * dc;
        return dx;
    }

private:
    ConvSpec spec_;
    std::size_t weight_ = 0;
    std::size_t bias_ = 0;
};

template <typename T>
struct NormCache {
    Tensor<T> normalized;
    std::vector<T> inv_std;
};

/// Per-channel normalization over the spatial extent with a learned affine
/// map (equivalent to batch normalization at batch size one).
template <typename T>
class InstanceNorm {
public:
    static constexpr double kEpsilon = 1e-5;

    InstanceNorm() = default;
    InstanceNorm(ParamSet<T>& params, const std::string& name, int channels) : channels_(channels) {
        gamma_ = params.add(name + ".gamma", {channels}, T(1));
        beta_ = params.add(name + ".beta", {channels});
    }

    std::size_t gamma_index() const { return gamma_; }
    std::size_t beta_index() const { return beta_; }

    Tensor<T> forward(const ParamSet<T>& params, const Tensor<T>& x, NormCache<T>* cache = nullptr) const {
        Tensor<T> y(x.channels(), x.height(), x.width());
        Tensor<T> xhat(x.channels(), x.height(), x.width());
        std::vector<T> inv(static_cast<std::size_t>(x.channels()));
        const auto& gamma = params[gamma_].values;
        const auto& beta = params[beta_].values;
        const double n = static_cast<double>(x.plane_size());
        for (int c = 0; c < x.channels(); ++c) {
            auto in = x.plane(c);
            double mean = 0.0;
            for (T v : in) mean += v;
            mean /= n;
            double var = 0.0;
            for (T v : in) var += (v - mean) * (v - mean);
            var /= n;
            const double inv_std = 1.0 / std::sqrt(var + kEpsilon);
            inv[c] = static_cast<T>(inv_std);
            auto xh = xhat.plane(c);
            auto out = y.plane(c);
            for (std::size_t i = 0; i < in.size(); ++i) {
                xh[i] = static_cast<T>((in[i] - mean) * inv_std);
                out[i] = gamma[c] * xh[i] + beta[c];
            }
        }
        if (cache) {
            cache->normalized = std::move(xhat);
            cache->inv_std = std::move(inv);
        }
        return y;
    }

    Tensor<T> backward(const ParamSet<T>& params, const NormCache<T>& cache, const Tensor<T>& grad_out,
                       ParamSet<T>* grads) const {
        const auto& gamma = params[gamma_].values;
        Tensor<T> dx(grad_out.channels(), grad_out.height(), grad_out.width());
        const double n = static_cast<double>(grad_out.plane_size());
        for (int c = 0; c < grad_out.channels(); ++c) {
            auto dy = grad_out.plane(c);
            auto xh = cache.normalized.plane(c);
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                sum_dy += dy[i];
                sum_dy_xh += dy[i] * xh[i];
            }
            if (grads) {
                (*grads)[gamma_].values[c] += static_cast<T>(sum_dy_xh);
                (*grads)[beta_].values[c] += static_cast<T>(sum_dy);
            }
            const double g = gamma[c];
            const double scale = g * cache.inv_std[c] / n;
            auto out = dx.plane(c);
            for (std::size_t i = 0; i < dy.size(); ++i)
                out[i] = static_cast<T>(scale * (n * dy[i] - sum_dy - xh[i] * sum_dy_xh));
        }
        return dx;
    }

private:
    int channels_ = 0;
    std::size_t gamma_ = 0;
    std::size_t beta_ = 0;
};

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
    Tensor<T> y = x;
    for (auto& v : y)
        if (v < T(0)) v *= slope;
    return y;
}

/// Gradient of leaky_relu given the layer input `x`.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope) {
    Tensor<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x[i] < T(0)) dx[i] *= slope;
    return dx;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y) v = std::tanh(v);
    return y;
}

/// Gradient of tanh given its output `y`.
template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
    Tensor<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= T(1) - y[i] * y[i];
    return dx;
}

template <typename T>
T sigmoid(T v) {
    return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
}

/// Inverted dropout: surviving units are scaled by 1/(1-rate). The mask holds
/// the per-unit multiplier so backward is a plain elementwise product.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, std::vector<T>* mask_out) {
    std::vector<T> mask(x.size());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
    if (mask_out) *mask_out = std::move(mask);
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out) {
    Tensor<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
    return dx;
}

}  // namespace crossgan::nn
