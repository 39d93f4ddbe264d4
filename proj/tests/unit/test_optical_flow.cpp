#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "support.hpp"

using namespace crossgan;
using namespace testing_support;

namespace {

/// Smooth multi-frequency texture; `shift` moves it right by that many pixels.
Image texture(int n, double shift = 0.0) {
    Image img(3, n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double u = x - shift;
            const double v = 0.5 + 0.2 * std::sin(0.31 * u) * std::cos(0.23 * y) + 0.15 * std::sin(0.13 * u + 0.17 * y) +
                             0.1 * std::cos(0.07 * u - 0.29 * y);
            for (int c = 0; c < 3; ++c) img(c, y, x) = static_cast<float>(v);
        }
    return img;
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(OpticalFlow, IdenticalFramesGiveZeroFlow) {
    const Image a = texture(64);
    const auto [u, v] = compute_raw_flow(a, a);
    for (std::size_t i = 0; i < u.size(); ++i) {
        ASSERT_LT(std::abs(u[i]), 0.05f);
        ASSERT_LT(std::abs(v[i]), 0.05f);
    }
}

TEST(OpticalFlow, RecoversKnownTranslation) {
    const int n = 64;
    const auto [u, v] = compute_raw_flow(texture(n), texture(n, 2.0));
    std::vector<double> us, vs;
    for (int y = 8; y < n - 8; ++y)
        for (int x = 8; x < n - 8; ++x) {
            us.push_back(u(0, y, x));
            vs.push_back(v(0, y, x));
        }
    const double mu = median(us), mv = median(vs);
    EXPECT_GE(mu, 1.5);
    EXPECT_LE(mu, 2.5);
    EXPECT_GE(mv, -0.5);
    EXPECT_LE(mv, 0.5);
}

TEST(OpticalFlow, MovingSquareMotionStaysNearSquare) {
    const int n = 64, side = 10, x0 = 24, y0 = 26, dx = 2;
    Image a(3, n, n, 0.2f), b(3, n, n, 0.2f);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = 0; x < side; ++x)
            for (int c = 0; c < 3; ++c) {
                const float shade = 0.6f + 0.03f * static_cast<float>(x % 4 + y % 3);
                a(c, y, x0 + x) = shade;
                b(c, y, x0 + dx + x) = shade;
            }
    const FlowConfig cfg;
    const FlowImage flow = compute_flow({a, 0, "sq"}, {b, 1, "sq"}, cfg);
    const Mask moving = motion_mask(flow, cfg.motion_epsilon);
    const int margin = 6;
    std::size_t total = 0, inside = 0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!moving(0, y, x)) continue;
            ++total;
            if (y >= y0 - margin && y < y0 + side + margin && x >= x0 - margin && x < x0 + dx + side + margin) ++inside;
        }
    ASSERT_GT(total, 0u);
    EXPECT_GE(static_cast<double>(inside) / total, 0.9);
}

TEST(OpticalFlow, RejectsShapeMismatch) {
    EXPECT_THROW(compute_raw_flow(Image(3, 8, 8), Image(3, 8, 16)), InputError);
}

TEST(OpticalFlow, ConfigValidated) {
    FlowConfig cfg;
    cfg.pyramid_levels = 0;
    EXPECT_THROW(compute_raw_flow(texture(16), texture(16), cfg), ConfigError);
}

TEST(FlowFile, RoundTripIsBitExact) {
    const auto dir = scratch_dir("flo");
    const auto u = random_tensor(1, 13, 17, 1, -30, 30);
    const auto v = random_tensor(1, 13, 17, 2, -30, 30);
    save_flow(dir / "a.flo", u, v);
    const auto [ru, rv] = read_flow(dir / "a.flo");
    EXPECT_EQ(ru, u);
    EXPECT_EQ(rv, v);
}

TEST(FlowFile, ZeroFlowLoadsAsMidpoint) {
    const auto dir = scratch_dir("flo_zero");
    save_flow(dir / "z.flo", Tensor<float>(1, 5, 6), Tensor<float>(1, 5, 6));
    const FlowImage f = load_precomputed_flow(dir / "z.flo");
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) {
            EXPECT_EQ(f.channels(0, y, x), 0.5f);
            EXPECT_EQ(f.channels(1, y, x), 0.5f);
            EXPECT_EQ(f.channels(2, y, x), 0.0f);
        }
}

TEST(FlowFile, WrongMagicRejected) {
    const auto dir = scratch_dir("flo_magic");
    {
        std::ofstream os(dir / "bad.flo", std::ios::binary);
        const float magic = 1.0f;
        const std::int32_t dims[2] = {2, 2};
        os.write(reinterpret_cast<const char*>(&magic), 4);
        os.write(reinterpret_cast<const char*>(dims), 8);
        const std::vector<float> data(8, 0.0f);
        os.write(reinterpret_cast<const char*>(data.data()), 32);
    }
    EXPECT_THROW(read_flow(dir / "bad.flo"), FormatError);
}

TEST(FlowFile, TruncatedRejected) {
    const auto dir = scratch_dir("flo_trunc");
    save_flow(dir / "t.flo", Tensor<float>(1, 4, 4), Tensor<float>(1, 4, 4));
    std::filesystem::resize_file(dir / "t.flo", 40);
    EXPECT_THROW(read_flow(dir / "t.flo"), FormatError);
}

TEST(FlowFile, RescaleScalesVectors) {
    const FlowImage f = rescale_flow(constant_flow(8, 1.0f, -0.5f), 16);
    EXPECT_EQ(f.height(), 16);
    EXPECT_FLOAT_EQ(f.raw_u(0, 5, 5), 2.0f);
    EXPECT_FLOAT_EQ(f.raw_v(0, 5, 5), -1.0f);
}

TEST(MotionMask, ZeroFlowAllFalse) {
    const Mask m = motion_mask(constant_flow(8, 0, 0), 0.1);
    for (auto v : m) EXPECT_EQ(v, 0);
}

TEST(MotionMask, SinglePixel) {
    Tensor<float> u(1, 8, 8), v(1, 8, 8);
    u(0, 3, 4) = 1.0f;
    const Mask m = motion_mask(encode_flow(u, v), 0.1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) EXPECT_EQ(m(0, y, x), (y == 3 && x == 4) ? 1 : 0);
}

TEST(MotionMask, CountMatchesDirectScan) {
    const FlowImage f = random_flow(32, 11, 0.3);
    const Mask m = motion_mask(f, 0.1);
    std::size_t expected = 0, got = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double a = f.raw_u(0, y, x), b = f.raw_v(0, y, x);
            expected += std::sqrt(a * a + b * b) > 0.1;
            got += m(0, y, x);
        }
    EXPECT_EQ(got, expected);
}
