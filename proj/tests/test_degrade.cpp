#include <gtest/gtest.h>

#include <cmath>

#include "depthbin/degrade.hpp"
#include "oracles.hpp"

namespace depthbin {
namespace {

DepthMap wavy_depth(int h, int w) {
    Grid<double> values(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            values.at(y, x) = 120.0 + 30.0 * std::sin(0.31 * x) + 20.0 * std::cos(0.17 * y + 0.4);
    return DepthMap(std::move(values));
}

TEST(CubicKernelTest, HalfPixelWeights) {
    const std::array<double, 4> w = cubic_weights(0.5);
    EXPECT_EQ(w[0], -0.0625);
    EXPECT_EQ(w[1], 0.5625);
    EXPECT_EQ(w[2], 0.5625);
    EXPECT_EQ(w[3], -0.0625);
}

TEST(CubicKernelTest, IntegerPositionsPickOneTap) {
    const std::array<double, 4> w = cubic_weights(0.0);
    EXPECT_EQ(w[0], 0.0);
    EXPECT_EQ(w[1], 1.0);
    EXPECT_EQ(w[2], 0.0);
    EXPECT_EQ(w[3], 0.0);
}

TEST(BicubicResampleTest, IdentityAtSameSize) {
    const DepthMap in = wavy_depth(13, 9);
    const DepthMap out = bicubic_resample(in, 13, 9);
    EXPECT_EQ(out.values(), in.values());
    EXPECT_EQ(out.valid_mask(), in.valid_mask());
}

TEST(BicubicResampleTest, ConstantInputStaysConstant) {
    const DepthMap in(Grid<double>(16, 16, 42.5));
    for (const auto& [oh, ow] : {std::pair{7, 5}, std::pair{16, 16}, std::pair{33, 40}}) {
        const DepthMap out = bicubic_resample(in, oh, ow);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) EXPECT_NEAR(out.value(y, x), 42.5, 1e-12);
    }
}

TEST(BicubicResampleTest, UndershootClampsAtZero) {
    Grid<double> step(1, 8, 0.0);
    for (int x = 4; x < 8; ++x) step.at(0, x) = 100.0;
    const DepthMap out = bicubic_resample(DepthMap(std::move(step)), 1, 16);
    for (int x = 0; x < 16; ++x) EXPECT_GE(out.value(0, x), 0.0);
}

TEST(GaussianBlurTest, SigmaZeroIsIdentity) {
    const DepthMap in = wavy_depth(8, 8);
    EXPECT_EQ(gaussian_blur(in, 0.0).values(), in.values());
}

TEST(GaussianBlurTest, ConstantInputStaysConstant) {
    const DepthMap in(Grid<double>(10, 10, 5.5));
    const DepthMap out = gaussian_blur(in, 3.6);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) EXPECT_NEAR(out.value(y, x), 5.5, 1e-12);
}

TEST(GaussianBlurTest, ImpulseMatchesKernelEvaluation) {
    const double sigma = 1.0;
    const int radius = 3;  // ceil(3 * sigma)
    double norm = 0.0;
    std::array<double, 7> kernel{};
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        norm += kernel[i + radius];
    }
    for (double& k : kernel) k /= norm;

    const int side = 15;
    Grid<double> impulse(side, side, 0.0);
    impulse.at(7, 7) = 1.0;
    const DepthMap out = gaussian_blur(DepthMap(std::move(impulse)), sigma);
    EXPECT_NEAR(out.value(7, 7), kernel[radius] * kernel[radius], 1e-12);
    EXPECT_NEAR(out.value(7, 4), kernel[radius] * kernel[0], 1e-12);
    double total = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) total += out.value(y, x);
    EXPECT_NEAR(total, 1.0, 1e-12);  // interior impulse: full kernel mass stays inside
}

TEST(AddGaussianNoiseTest, SigmaZeroAddsMean) {
    const DepthMap in(Grid<double>(4, 4, 10.0));
    const DepthMap out = add_gaussian_noise(in, 2.5, 0.0, 99);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_EQ(out.value(y, x), 12.5);
}

TEST(AddGaussianNoiseTest, SeededAndReproducible) {
    const DepthMap in = wavy_depth(12, 12);
    const DepthMap a = add_gaussian_noise(in, 0.0, 0.07, 1234);
    const DepthMap b = add_gaussian_noise(in, 0.0, 0.07, 1234);
    const DepthMap c = add_gaussian_noise(in, 0.0, 0.07, 1235);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_NE(a.values(), c.values());
}

TEST(AddGaussianNoiseTest, SampleMeanNearRequested) {
    const int side = 1000;  // 1e6 pixels
    const DepthMap in(Grid<double>(side, side, 50.0));
    const double sigma = 0.5;
    const DepthMap out = add_gaussian_noise(in, 0.0, sigma, 7);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.values().size(); ++i) sum += out.values()[i] - 50.0;
    const double sample_mean = sum / static_cast<double>(side) / side;
    EXPECT_LE(std::abs(sample_mean), 4.0 * sigma / 1000.0);
}

TEST(AddGaussianNoiseTest, ClampsAtZero) {
    const DepthMap in(Grid<double>(20, 20, 0.01));
    const DepthMap out = add_gaussian_noise(in, 0.0, 5.0, 3);
    for (std::size_t i = 0; i < out.values().size(); ++i) EXPECT_GE(out.values()[i], 0.0);
}

TEST(MakeLrTest, ScaleOneWithoutNoiseIsIdentity) {
    const DepthMap gt = wavy_depth(24, 18);
    DegradeSpec spec;
    spec.scale = 1.0;
    const DepthMap lr = make_lr(gt, spec);
    EXPECT_EQ(lr.values(), gt.values());
}

TEST(MakeLrTest, OutputSizeArithmetic) {
    const DepthMap gt256 = wavy_depth(256, 256);
    DegradeSpec spec;
    spec.scale = 4.0;
    const DepthMap lr4 = make_lr(gt256, spec);
    EXPECT_EQ(lr4.height(), 64);
    EXPECT_EQ(lr4.width(), 64);

    const DepthMap gt330 = wavy_depth(330, 330);
    spec.scale = 3.3;  // non-integer factor
    const DepthMap lr33 = make_lr(gt330, spec);
    EXPECT_EQ(lr33.height(), 100);
    EXPECT_EQ(lr33.width(), 100);
}

TEST(MakeLrTest, DegenerateSizeErrors) {
    const DepthMap gt = wavy_depth(4, 4);
    DegradeSpec spec;
    spec.scale = 100.0;
    EXPECT_THROW(make_lr(gt, spec), ValidationFailure);
}

TEST(MakeLrTest, ResampledErrorVanishesOnlyAtScaleOne) {
    const DepthMap gt = wavy_depth(32, 32);
    DegradeSpec spec;
    spec.scale = 2.0;
    const DepthMap lr = make_lr(gt, spec);
    const DepthMap back = bicubic_resample(lr, 32, 32);
    double max_err = 0.0;
    for (std::size_t i = 0; i < back.values().size(); ++i)
        max_err = std::max(max_err, std::abs(back.values()[i] - gt.values()[i]));
    EXPECT_GT(max_err, 0.0);
}

}  // namespace
}  // namespace depthbin
