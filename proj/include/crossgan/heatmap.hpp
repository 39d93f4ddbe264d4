#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"

namespace crossgan {

/// Jet colormap: blue (0) -> cyan -> yellow -> red -> dark red (1).
inline std::array<float, 3> jet_color(float a) {
    a = std::clamp(a, 0.0f, 1.0f);
    auto ramp = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
    return {ramp(1.5f - std::abs(4.0f * a - 3.0f)), ramp(1.5f - std::abs(4.0f * a - 2.0f)),
            ramp(1.5f - std::abs(4.0f * a - 1.0f))};
}

/// Maximum blending weight of the overlay (reached at abnormality 1).
inline constexpr float kHeatmapAlpha = 0.5f;

/// Overlays jet(A) on the frame with per-pixel opacity kHeatmapAlpha * A, so
/// pixels with zero abnormality keep the frame colour exactly.
inline Image render_heatmap(const AbnormalityMap& map, const Frame& frame) {
    const Image& px = frame.pixels;
    if (map.values.height() != px.height() || map.values.width() != px.width())
        throw InputError("render_heatmap: map " + map.values.shape_string() + " and frame " + px.shape_string() +
                         " differ in size");
    Image out = px;
    for (int y = 0; y < px.height(); ++y)
        for (int x = 0; x < px.width(); ++x) {
            const float a = std::clamp(map.values(0, y, x), 0.0f, 1.0f);
            if (a == 0.0f) continue;
            const auto col = jet_color(a);
            const float w = kHeatmapAlpha * a;
            for (int c = 0; c < 3; ++c) out(c, y, x) = (1.0f - w) * px(c, y, x) + w * col[c];
        }
    return out;
}

}  // namespace crossgan
