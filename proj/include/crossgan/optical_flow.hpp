#pragma once

// Dense optical flow between consecutive frames: coarse-to-fine Horn-Schunck
// with image warping at every pyramid level. At each level the brightness
// constancy constraint is linearized around the current estimate and the
// classical Horn-Schunck fixed-point iteration solves for the total flow.

#include <algorithm>
#include <cmath>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"
#include "crossgan/image_ops.hpp"

namespace crossgan {

struct FlowConfig {
    int pyramid_levels = 4;
    int iterations_per_level = 150;
    int warps_per_level = 2;
    /// Weight of the smoothness term (alpha squared in Horn-Schunck).
    double smoothness_weight = 0.004;
    /// Flow is kept only within this many pixels of a pixel whose intensity
    /// changed by more than `change_threshold`; elsewhere it is set to zero.
    int support_radius = 3;
    double change_threshold = 0.02;
    /// A pixel is "moving" when its raw flow magnitude exceeds this (px/frame).
    double motion_epsilon = 0.1;
    FlowEncoding encoding;

    void validate() const {
        if (pyramid_levels < 1) throw ConfigError("flow.pyramid_levels must be >= 1");
        if (iterations_per_level < 1) throw ConfigError("flow.iterations_per_level must be >= 1");
        if (warps_per_level < 1) throw ConfigError("flow.warps_per_level must be >= 1");
        if (!(smoothness_weight > 0.0)) throw ConfigError("flow.smoothness_weight must be positive");
        if (support_radius < 0) throw ConfigError("flow.support_radius must be >= 0");
        if (!(change_threshold >= 0.0)) throw ConfigError("flow.change_threshold must be >= 0");
        if (!(motion_epsilon > 0.0)) throw ConfigError("flow.motion_epsilon must be positive");
        if (!(encoding.max_displacement > 0.0)) throw ConfigError("flow.max_displacement must be positive");
    }
};

namespace flow_detail {

using Plane = Tensor<float>;

inline float at_clamped(const Plane& p, int y, int x) {
    y = std::clamp(y, 0, p.height() - 1);
    x = std::clamp(x, 0, p.width() - 1);
    return p(0, y, x);
}

inline float sample_bilinear(const Plane& p, float y, float x) {
    y = std::clamp(y, 0.0f, static_cast<float>(p.height() - 1));
    x = std::clamp(x, 0.0f, static_cast<float>(p.width() - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, p.height() - 1);
    const int x1 = std::min(x0 + 1, p.width() - 1);
    const float wy = y - y0, wx = x - x0;
    return (1 - wy) * ((1 - wx) * p(0, y0, x0) + wx * p(0, y0, x1)) + wy * ((1 - wx) * p(0, y1, x0) + wx * p(0, y1, x1));
}

/// 3x3 binomial smoothing with replicated borders.
inline Plane smooth(const Plane& p) {
    Plane tmp(1, p.height(), p.width()), out(1, p.height(), p.width());
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x)
            tmp(0, y, x) = 0.25f * at_clamped(p, y, x - 1) + 0.5f * p(0, y, x) + 0.25f * at_clamped(p, y, x + 1);
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x)
            out(0, y, x) = 0.25f * at_clamped(tmp, y - 1, x) + 0.5f * tmp(0, y, x) + 0.25f * at_clamped(tmp, y + 1, x);
    return out;
}

/// Horn-Schunck neighbourhood average (1/6 edge neighbours, 1/12 diagonals).
inline Plane neighbour_average(const Plane& p) {
    Plane out(1, p.height(), p.width());
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
            const float edge = at_clamped(p, y - 1, x) + at_clamped(p, y + 1, x) + at_clamped(p, y, x - 1) +
                               at_clamped(p, y, x + 1);
            const float diag = at_clamped(p, y - 1, x - 1) + at_clamped(p, y - 1, x + 1) +
                               at_clamped(p, y + 1, x - 1) + at_clamped(p, y + 1, x + 1);
            out(0, y, x) = edge / 6.0f + diag / 12.0f;
        }
    return out;
}

/// Refines (u, v) on one pyramid level.
inline void refine_level(const Plane& first, const Plane& second, Plane& u, Plane& v, const FlowConfig& cfg) {
    const int h = first.height(), w = first.width();
    const float alpha2 = static_cast<float>(cfg.smoothness_weight);
    for (int warp = 0; warp < cfg.warps_per_level; ++warp) {
        Plane warped(1, h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                warped(0, y, x) = sample_bilinear(second, y + v(0, y, x), x + u(0, y, x));

        Plane ix(1, h, w), iy(1, h, w), it(1, h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float gx1 = 0.5f * (at_clamped(first, y, x + 1) - at_clamped(first, y, x - 1));
                const float gx2 = 0.5f * (at_clamped(warped, y, x + 1) - at_clamped(warped, y, x - 1));
                const float gy1 = 0.5f * (at_clamped(first, y + 1, x) - at_clamped(first, y - 1, x));
                const float gy2 = 0.5f * (at_clamped(warped, y + 1, x) - at_clamped(warped, y - 1, x));
                ix(0, y, x) = 0.5f * (gx1 + gx2);
                iy(0, y, x) = 0.5f * (gy1 + gy2);
                it(0, y, x) = warped(0, y, x) - first(0, y, x);
            }

        const Plane u0 = u, v0 = v;
        for (int iter = 0; iter < cfg.iterations_per_level; ++iter) {
            const Plane ua = neighbour_average(u);
            const Plane va = neighbour_average(v);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const float gx = ix[i], gy = iy[i];
                const float residual = it[i] + gx * (ua[i] - u0[i]) + gy * (va[i] - v0[i]);
                const float k = residual / (alpha2 + gx * gx + gy * gy);
                u[i] = ua[i] - gx * k;
                v[i] = va[i] - gy * k;
            }
        }
    }
}

/// Pixels within `radius` (Chebyshev) of an intensity change above `threshold`.
inline std::vector<unsigned char> change_support(const Plane& a, const Plane& b, int radius, double threshold) {
    const int h = a.height(), w = a.width();
    std::vector<unsigned char> changed(a.size()), rows(a.size()), out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) changed[i] = std::abs(b[i] - a[i]) > threshold;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool any = false;
            for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !any; ++k) any = changed[y * w + k];
            rows[y * w + x] = any;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool any = false;
            for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !any; ++k) any = rows[k * w + x];
            out[y * w + x] = any;
        }
    return out;
}

}  // namespace flow_detail

/// Raw (u, v) displacement field from `first` to `second`, in px/frame.
inline std::pair<Tensor<float>, Tensor<float>> compute_raw_flow(const Image& first, const Image& second,
                                                                const FlowConfig& cfg = {}) {
    using flow_detail::Plane;
    cfg.validate();
    if (!first.same_shape(second) || first.empty())
        throw InputError("compute_flow: frame shapes differ: " + first.shape_string() + " vs " + second.shape_string());

    std::vector<Plane> pyr1{flow_detail::smooth(to_gray(first))};
    std::vector<Plane> pyr2{flow_detail::smooth(to_gray(second))};
    while (static_cast<int>(pyr1.size()) < cfg.pyramid_levels && pyr1.back().height() >= 16 &&
           pyr1.back().width() >= 16) {
        const Plane& a = pyr1.back();
        const Plane& b = pyr2.back();
        pyr1.push_back(resize_bilinear(a, a.height() / 2, a.width() / 2));
        pyr2.push_back(resize_bilinear(b, b.height() / 2, b.width() / 2));
    }

    Plane u(1, pyr1.back().height(), pyr1.back().width());
    Plane v(1, pyr1.back().height(), pyr1.back().width());
    for (std::size_t level = pyr1.size(); level-- > 0;) {
        const Plane& a = pyr1[level];
        if (u.height() != a.height() || u.width() != a.width()) {
            const float sy = static_cast<float>(a.height()) / u.height();
            const float sx = static_cast<float>(a.width()) / u.width();
            u = resize_bilinear(u, a.height(), a.width());
            v = resize_bilinear(v, a.height(), a.width());
            for (auto& x : u) x *= sx;
            for (auto& y : v) y *= sy;
        }
        flow_detail::refine_level(a, pyr2[level], u, v, cfg);
    }
    const auto support = flow_detail::change_support(pyr1.front(), pyr2.front(), cfg.support_radius, cfg.change_threshold);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!support[i]) u[i] = v[i] = 0.0f;
    return {std::move(u), std::move(v)};
}

/// Flow from frame a to frame b, encoded for use as a network image.
inline FlowImage compute_flow(const Frame& a, const Frame& b, const FlowConfig& cfg = {}) {
    auto [u, v] = compute_raw_flow(a.pixels, b.pixels, cfg);
    return encode_flow(u, v, cfg.encoding, a.index, a.video_id);
}

/// Pixels whose raw flow magnitude exceeds `motion_epsilon`.
inline Mask motion_mask(const FlowImage& flow, double motion_epsilon) {
    Mask m(1, flow.height(), flow.width());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = flow.raw_magnitude(i) > motion_epsilon ? 1 : 0;
    return m;
}

}  // namespace crossgan
