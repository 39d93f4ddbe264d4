#pragma once

#include <algorithm>
#include <cmath>

#include "crossgan/errors.hpp"
#include "crossgan/tensor.hpp"

namespace crossgan {

/// Bilinear resampling with pixel-centre alignment (the sample for output
/// pixel y sits at (y + 0.5) * in/out - 0.5 in input coordinates, clamped to
/// the border). Every output value is a convex combination of input values.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& in, int out_h, int out_w) {
    if (in.empty()) throw InputError("resize_bilinear: empty input");
    if (out_h <= 0 || out_w <= 0) throw InputError("resize_bilinear: nonpositive target size");
    if (in.height() == out_h && in.width() == out_w) return in;

    struct Tap {
        int i0, i1;
        double w1;
    };
    auto taps = [](int in_size, int out_size) {
        std::vector<Tap> t(static_cast<std::size_t>(out_size));
        const double scale = static_cast<double>(in_size) / out_size;
        for (int o = 0; o < out_size; ++o) {
            double s = (o + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
            const int i0 = static_cast<int>(std::floor(s));
            const int i1 = std::min(i0 + 1, in_size - 1);
            t[o] = {i0, i1, s - i0};
        }
        return t;
    };
    const auto ty = taps(in.height(), out_h);
    const auto tx = taps(in.width(), out_w);

    Tensor<T> out(in.channels(), out_h, out_w);
    for (int c = 0; c < in.channels(); ++c) {
        for (int y = 0; y < out_h; ++y) {
            const Tap& a = ty[y];
            for (int x = 0; x < out_w; ++x) {
                const Tap& b = tx[x];
                const double top = (1.0 - b.w1) * in(c, a.i0, b.i0) + b.w1 * in(c, a.i0, b.i1);
                const double bottom = (1.0 - b.w1) * in(c, a.i1, b.i0) + b.w1 * in(c, a.i1, b.i1);
                out(c, y, x) = static_cast<T>((1.0 - a.w1) * top + a.w1 * bottom);
            }
        }
    }
    return out;
}

/// Luma of a 3-channel unit-range image (single channel output). A 1-channel
/// input is returned unchanged.
inline Tensor<float> to_gray(const Tensor<float>& rgb) {
    if (rgb.channels() == 1) return rgb;
    if (rgb.channels() != 3) throw InputError("to_gray: expected 1 or 3 channels, got " + rgb.shape_string());
    Tensor<float> g(1, rgb.height(), rgb.width());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 0.299f * rgb.plane(0)[i] + 0.587f * rgb.plane(1)[i] + 0.114f * rgb.plane(2)[i];
    return g;
}

}  // namespace crossgan
