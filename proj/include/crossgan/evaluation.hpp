#pragma once

// Frame-level and pixel-level ROC analysis of abnormality maps.
//
// Frame level: a frame is flagged at threshold t when its largest map value
// is >= t. Pixel level: the predicted region at t is {pixels >= t}; an
// abnormal frame is a true positive when the predicted region covers at least
// 40% of its ground-truth region. False-positive rates are taken over normal
// frames (any predicted pixel in a normal frame is a false alarm). Abnormal
// frames that predict pixels but miss the 40% overlap are counted separately
// in RocPoint::mislocalized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "crossgan/data_model.hpp"
#include "crossgan/errors.hpp"

namespace crossgan {

inline constexpr double kPixelOverlapRatio = 0.40;
inline constexpr int kThresholdGridSize = 201;

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    std::size_t mislocalized = 0;
};

/// Points ordered by strictly decreasing threshold, from (0,0) to (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
};

/// 201 evenly spaced thresholds over [0,1], the supplied score values, and a
/// sentinel above every score; sorted strictly decreasing.
inline std::vector<double> default_thresholds(const std::vector<double>& scores) {
    std::vector<double> t;
    t.reserve(kThresholdGridSize + scores.size() + 1);
    for (int i = 0; i < kThresholdGridSize; ++i) t.push_back(static_cast<double>(i) / (kThresholdGridSize - 1));
    double top = 1.0;
    for (double s : scores) {
        t.push_back(s);
        top = std::max(top, s);
    }
    t.push_back(std::nextafter(top, std::numeric_limits<double>::infinity()));
    std::sort(t.begin(), t.end(), std::greater<>());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

namespace eval_detail {

inline void count_classes(const std::vector<bool>& labels, std::size_t& pos, std::size_t& neg) {
    pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw InputError("ROC evaluation needs both abnormal and normal frames");
}

inline std::vector<double> sorted_desc(std::vector<double> t) {
    std::sort(t.begin(), t.end(), std::greater<>());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

}  // namespace eval_detail

/// ROC of per-frame scores (frame predicted abnormal iff score >= threshold).
inline RocCurve roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels,
                                const std::vector<double>& thresholds) {
    if (scores.size() != labels.size())
        throw InputError("ROC: " + std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) +
                         " labels");
    std::size_t pos = 0, neg = 0;
    eval_detail::count_classes(labels, pos, neg);
    RocCurve curve;
    for (double th : eval_detail::sorted_desc(thresholds)) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= th) (labels[i] ? tp : fp)++;
        curve.points.push_back({th, static_cast<double>(tp) / pos, static_cast<double>(fp) / neg, 0});
    }
    return curve;
}

/// Convenience: ROC over the distinct scores plus a sentinel above them.
inline RocCurve roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::vector<double> t = scores;
    double top = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
    t.push_back(std::nextafter(top, std::numeric_limits<double>::infinity()));
    return roc_from_scores(scores, labels, t);
}

inline std::vector<double> map_maxima(const std::vector<AbnormalityMap>& maps) {
    std::vector<double> out;
    out.reserve(maps.size());
    for (const auto& m : maps) {
        if (m.values.empty()) throw InputError("empty abnormality map");
        out.push_back(*std::max_element(m.values.begin(), m.values.end()));
    }
    return out;
}

inline RocCurve frame_level_eval(const std::vector<AbnormalityMap>& maps, const std::vector<bool>& labels,
                                 const std::vector<double>& thresholds) {
    if (maps.size() != labels.size())
        throw InputError("frame_level_eval: " + std::to_string(maps.size()) + " maps but " +
                         std::to_string(labels.size()) + " labels");
    return roc_from_scores(map_maxima(maps), labels, thresholds);
}

inline RocCurve frame_level_eval(const std::vector<AbnormalityMap>& maps, const std::vector<bool>& labels) {
    if (maps.size() != labels.size()) throw InputError("frame_level_eval: map/label count mismatch");
    return frame_level_eval(maps, labels, default_thresholds(map_maxima(maps)));
}

/// Per-frame summary for the pixel-level rule: the frame's largest value and
/// the largest threshold at which the 40% overlap requirement still holds.
struct PixelFrameSummary {
    bool abnormal = false;
    double max_value = 0.0;
    double localization_value = -1.0;
};

inline PixelFrameSummary summarize_pixel_frame(const AbnormalityMap& map, const GroundTruth& gt) {
    PixelFrameSummary s;
    s.abnormal = gt.abnormal;
    s.max_value = *std::max_element(map.values.begin(), map.values.end());
    if (!gt.abnormal) return s;
    if (!gt.pixel_mask) throw InputError("pixel_level_eval: abnormal frame " + std::to_string(map.index) + " has no mask");
    const Mask& mask = *gt.pixel_mask;
    if (mask.height() != map.values.height() || mask.width() != map.values.width())
        throw InputError("pixel_level_eval: mask size differs from map size");
    std::vector<double> inside;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) inside.push_back(map.values[i]);
    if (inside.empty()) throw InputError("pixel_level_eval: abnormal frame " + std::to_string(map.index) + " has an empty mask");
    std::sort(inside.begin(), inside.end(), std::greater<>());
    // smallest k with k >= 0.4 * |gt|, in exact integer arithmetic
    const std::size_t k = (4 * inside.size() + 9) / 10;
    s.localization_value = inside[k - 1];
    return s;
}

inline RocCurve pixel_level_eval(const std::vector<AbnormalityMap>& maps, const std::vector<GroundTruth>& gts,
                                 const std::vector<double>& thresholds) {
    if (maps.size() != gts.size())
        throw InputError("pixel_level_eval: " + std::to_string(maps.size()) + " maps but " +
                         std::to_string(gts.size()) + " ground-truth entries");
    std::vector<PixelFrameSummary> frames;
    std::vector<bool> labels;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        frames.push_back(summarize_pixel_frame(maps[i], gts[i]));
        labels.push_back(gts[i].abnormal);
    }
    std::size_t pos = 0, neg = 0;
    eval_detail::count_classes(labels, pos, neg);
    RocCurve curve;
    for (double th : eval_detail::sorted_desc(thresholds)) {
        std::size_t tp = 0, fp = 0, mis = 0;
        for (const auto& f : frames) {
            const bool predicts = f.max_value >= th;
            if (!f.abnormal) {
                fp += predicts ? 1 : 0;
            } else if (f.localization_value >= th) {
                ++tp;
            } else if (predicts) {
                ++mis;
            }
        }
        curve.points.push_back({th, static_cast<double>(tp) / pos, static_cast<double>(fp) / neg, mis});
    }
    return curve;
}

inline RocCurve pixel_level_eval(const std::vector<AbnormalityMap>& maps, const std::vector<GroundTruth>& gts) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < maps.size() && i < gts.size(); ++i) {
        const auto s = summarize_pixel_frame(maps[i], gts[i]);
        scores.push_back(s.max_value);
        if (s.abnormal) scores.push_back(s.localization_value);
    }
    return pixel_level_eval(maps, gts, default_thresholds(scores));
}

inline void check_curve(const RocCurve& curve) {
    if (curve.points.size() < 2) throw InputError("ROC curve needs at least 2 points");
}

/// Trapezoidal area under TPR(FPR).
inline double auc(const RocCurve& curve) {
    check_curve(curve);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

/// Rate at which FPR = 1 - TPR, linearly interpolated between the two
/// bracketing curve points.
inline double eer(const RocCurve& curve) {
    check_curve(curve);
    const auto& p = curve.points;
    auto gap = [](const RocPoint& q) { return q.fpr + q.tpr - 1.0; };
    if (gap(p.front()) >= 0.0) return p.front().fpr;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double g0 = gap(p[i - 1]), g1 = gap(p[i]);
        if (g1 < 0.0) continue;
        const double s = g1 == g0 ? 0.0 : -g0 / (g1 - g0);
        return p[i - 1].fpr + s * (p[i].fpr - p[i - 1].fpr);
    }
    return p.back().fpr;
}

}  // namespace crossgan
