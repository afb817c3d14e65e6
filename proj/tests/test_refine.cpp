#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "depthbin/refine.hpp"
#include "oracles.hpp"

namespace depthbin {
namespace {

HyperParams tiny_params() {
    HyperParams hp;
    hp.n_bins = 8;
    hp.n_stages = 2;
    hp.hidden_channels = 6;
    return hp;
}

FeatureMap synth_color(int h, int w) {
    Volume<double> rgb(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            rgb.at(0, y, x) = static_cast<double>(x) / w;
            rgb.at(1, y, x) = static_cast<double>(y) / h;
            rgb.at(2, y, x) = 0.5;
        }
    }
    return FeatureMap(std::move(rgb));
}

DepthMap synth_depth(int h, int w, double base = 100.0, double amp = 40.0) {
    Grid<double> values(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            values.at(y, x) =
                base + amp * (std::sin(0.37 * x) * std::cos(0.23 * y) * 0.5 + 0.5) + 0.1 * x;
    return DepthMap(std::move(values));
}

std::vector<ProbHeadWeights> stage_weights(const HyperParams& hp, int feat_channels,
                                           std::uint64_t seed) {
    std::vector<ProbHeadWeights> all;
    for (int i = 0; i < hp.n_stages; ++i)
        all.push_back(make_prob_head_weights(hp.n_bins, feat_channels, 2 * feat_channels,
                                             hp.hidden_channels, seed + i));
    return all;
}

StageInputs make_stage_inputs(const DepthMap& coarse, int feat_channels, std::uint64_t seed) {
    Rng rng(seed);
    return StageInputs{
        coarse,
        FeatureMap{testing::random_volume(rng, feat_channels, coarse.height(), coarse.width(), -1.0, 1.0)},
        DegradationMap(testing::random_grid(rng, coarse.height(), coarse.width(), 0.0, 2.0)),
        FeatureMap{testing::random_volume(rng, feat_channels, coarse.height(), coarse.width(), -1.0, 1.0)}};
}

TEST(DdbStageTest, OutputStaysInsideAdjustedRange) {
    const HyperParams hp = tiny_params();
    const DepthMap coarse = synth_depth(8, 8);
    const StageInputs inputs = make_stage_inputs(coarse, 4, 21);
    const BinPartition partition = partition_uniform(coarse, hp.n_bins);
    const auto weights = make_prob_head_weights(hp.n_bins, 4, 8, hp.hidden_channels, 5);

    const StageResult result = ddb_stage(inputs, partition, weights, hp);
    EXPECT_TRUE(validate(result.depth).ok());
    EXPECT_TRUE(validate(result.probs).ok());
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            EXPECT_GE(result.depth.value(y, x), result.partition.v_min(y, x));
            EXPECT_LE(result.depth.value(y, x), result.partition.v_max(y, x));
        }
    }
}

TEST(DdbStageTest, ZeroHeadConvGivesAdjustedRangeMidpoint) {
    const HyperParams hp = tiny_params();
    const DepthMap coarse = synth_depth(6, 6);
    const StageInputs inputs = make_stage_inputs(coarse, 4, 22);
    const BinPartition partition = partition_uniform(coarse, hp.n_bins);
    auto weights = make_prob_head_weights(hp.n_bins, 4, 8, hp.hidden_channels, 6);
    std::fill(weights.head_conv.weights.begin(), weights.head_conv.weights.end(), 0.0);
    std::fill(weights.head_conv.bias.begin(), weights.head_conv.bias.end(), 0.0);

    const StageResult result = ddb_stage(inputs, partition, weights, hp);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            const double mid = 0.5 * (result.partition.v_min(y, x) + result.partition.v_max(y, x));
            EXPECT_NEAR(result.depth.value(y, x), mid, 1e-9 * std::max(1.0, mid));
        }
    }
}

TEST(DdbStageTest, SymmetricRangeUniformCombineEqualsEstimate) {
    // The stage's opening combine under uniform probabilities returns the
    // range midpoint, i.e. the current estimate when the range is symmetric
    // around it.
    const int side = 4;
    Grid<double> lo(side, side, 42.0), hi(side, side, 58.0);
    const BinPartition partition = partition_uniform(std::move(lo), std::move(hi), 8);
    const DepthMap estimate = combine(bin_centers(partition), ProbabilityVolume::uniform(8, side, side));
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) EXPECT_DOUBLE_EQ(estimate.value(y, x), 50.0);
}

TEST(DdbStageTest, ConstantSigmaZeroHeadReducesToBinMidpoint) {
    // Constant degradation -> sigma == 0 -> adjusted range is exactly the
    // bin holding the range midpoint; a zeroed head then emits its center.
    const HyperParams hp = tiny_params();
    const int side = 4;
    const DepthMap coarse(Grid<double>(side, side, 50.0));
    StageInputs inputs{coarse, FeatureMap(4, side, side, 0.1), DegradationMap(Grid<double>(side, side, 0.3)),
                       FeatureMap(4, side, side, 0.2)};
    Grid<double> lo(side, side, 50.0 - 8.0);
    Grid<double> hi(side, side, 50.0 + 8.0);
    const BinPartition partition = partition_uniform(std::move(lo), std::move(hi), hp.n_bins);
    auto weights = make_prob_head_weights(hp.n_bins, 4, 8, hp.hidden_channels, 7);
    std::fill(weights.head_conv.weights.begin(), weights.head_conv.weights.end(), 0.0);
    std::fill(weights.head_conv.bias.begin(), weights.head_conv.bias.end(), 0.0);
    const StageResult result = ddb_stage(inputs, partition, weights, hp);
    // Midpoint 50 sits on the shared edge of bins 3|4; the tie goes to bin 4
    // = [50, 52]; its midpoint is 51.
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) EXPECT_NEAR(result.depth.value(y, x), 51.0, 1e-12);
}

TEST(DdbStageTest, OracleOneHotStageHalvesBinWidthError) {
    // One stage with sigma = 0 and a one-hot oracle on the bin containing
    // GT: the emitted depth is that bin's center, at most W/2 from GT.
    Rng rng(77);
    const int n_bins = 8, side = 6;
    Grid<double> gt_vals(side, side);
    for (std::size_t i = 0; i < gt_vals.size(); ++i) gt_vals[i] = 20.0 + rng.next_uniform(0.0, 16.0);
    const DepthMap gt(std::move(gt_vals));
    const BinPartition partition =
        partition_uniform(Grid<double>(side, side, 20.0), Grid<double>(side, side, 36.0), n_bins);
    const double half_width = 0.5 * partition.bin_width(0, 0);

    const CandidateVolume centers = bin_centers(partition);
    const ProbabilityVolume one_hot =
        ProbabilityVolume::one_hot(n_bins, locate_target_bin(partition, gt).indices());
    const DepthMap out = combine(centers, one_hot);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            EXPECT_LE(std::abs(out.value(y, x) - gt.value(y, x)), half_width + 1e-12);
}

TEST(RefineMultistageTest, ConstantSceneAtScaleOneIsIdentity) {
    // Constant GT keeps every per-pixel range degenerate (the residual
    // degradation is identically zero), so each stage reproduces the input
    // bit-for-bit.
    const HyperParams hp = tiny_params();
    const int side = 10;
    const DepthMap lr(Grid<double>(side, side, 73.0));
    const FeatureMap color = synth_color(side, side);
    const SmallEncoderProvider fp(2, 4);
    const ResidualDegradationProvider dp(3);
    const RefineResult result = refine_multistage(color, lr, fp, dp, stage_weights(hp, 4, 11), hp);
    EXPECT_EQ(result.depth.values(), lr.values());
}

TEST(RefineMultistageTest, SingleStageEqualsOneDdbStage) {
    HyperParams hp = tiny_params();
    hp.n_stages = 1;
    const int side = 12;
    const DepthMap gt = synth_depth(side, side);
    const DepthMap lr(Grid<double>(gt.values()));
    const FeatureMap color = synth_color(side, side);
    const SmallEncoderProvider fp(3, 4);
    const ResidualDegradationProvider dp(3);
    const auto weights = stage_weights(hp, 4, 31);

    const RefineResult full = refine_multistage(color, lr, fp, dp, weights, hp);

    const ProviderOutput features = fp.produce(color, lr);
    const DepthMap x1 = bicubic_resample(lr, side, side);
    const StageInputs inputs{x1, features.layer_feats[0], dp.estimate(x1, features.initial_depth),
                             features.context};
    const StageResult stage = ddb_stage(inputs, partition_uniform(x1, hp.n_bins), weights[0], hp);
    EXPECT_EQ(full.depth.values(), stage.depth.values());
    ASSERT_EQ(full.trace.per_stage_depths.size(), 1u);
    ASSERT_EQ(full.trace.per_stage_partitions.size(), 1u);
    ASSERT_EQ(full.trace.per_stage_probs.size(), 1u);
}

TEST(RefineMultistageTest, DeterministicAcrossRuns) {
    const HyperParams hp = tiny_params();
    const int side = 16;
    const DepthMap gt = synth_depth(side, side);
    const DepthMap lr = bicubic_resample(gt, side / 2, side / 2);
    const FeatureMap color = synth_color(side, side);
    const SmallEncoderProvider fp(9, 4);
    const ResidualDegradationProvider dp(3);
    const auto weights = stage_weights(hp, 4, 41);

    const RefineResult a = refine_multistage(color, lr, fp, dp, weights, hp);
    const RefineResult b = refine_multistage(color, lr, fp, dp, weights, hp);
    EXPECT_EQ(a.depth.values(), b.depth.values());
    EXPECT_EQ(a.depth.valid_mask(), b.depth.valid_mask());
}

TEST(RefineMultistageTest, IterativeUseTakesPreviousOutputAsReference) {
    const HyperParams hp = tiny_params();
    const int side = 16;
    const DepthMap gt = synth_depth(side, side);
    const DepthMap lr = bicubic_resample(gt, side / 2, side / 2);
    const FeatureMap color = synth_color(side, side);
    const SmallEncoderProvider fp(9, 4);
    const ResidualDegradationProvider dp(3);
    const auto weights = stage_weights(hp, 4, 41);

    const RefineResult first = refine_multistage(color, lr, fp, dp, weights, hp);
    const RefineResult second = refine_multistage(color, lr, fp, dp, weights, hp, &first.depth);
    EXPECT_TRUE(validate(second.depth).ok());
    const RefineResult repeat = refine_multistage(color, lr, fp, dp, weights, hp, &first.depth);
    EXPECT_EQ(second.depth.values(), repeat.depth.values());  // iterative pass is deterministic too
}

TEST(RefineMultistageTest, StageCountMismatchErrors) {
    const HyperParams hp = tiny_params();  // wants 2 stages
    const DepthMap lr = synth_depth(8, 8);
    const FeatureMap color = synth_color(8, 8);
    const SmallEncoderProvider fp(1, 4);
    const ResidualDegradationProvider dp(3);
    const auto weights = stage_weights(hp, 4, 51);
    std::vector<ProbHeadWeights> too_few(weights.begin(), weights.begin() + 1);
    EXPECT_THROW(refine_multistage(color, lr, fp, dp, too_few, hp), ValidationFailure);
}

TEST(RefineMultistageTest, PerStageOutputsStayInsideTheirPartitions) {
    const HyperParams hp = tiny_params();
    const int side = 16;
    const DepthMap gt = synth_depth(side, side);
    const DepthMap lr = bicubic_resample(gt, side / 4, side / 4);
    const FeatureMap color = synth_color(side, side);
    const SmallEncoderProvider fp(5, 4);
    const ResidualDegradationProvider dp(3);
    const RefineResult result = refine_multistage(color, lr, fp, dp, stage_weights(hp, 4, 61), hp);

    ASSERT_EQ(result.trace.per_stage_depths.size(), static_cast<std::size_t>(hp.n_stages));
    for (int s = 0; s < hp.n_stages; ++s) {
        const DepthMap& depth = result.trace.per_stage_depths[s];
        const BinPartition& part = result.trace.per_stage_partitions[s];
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                EXPECT_GE(depth.value(y, x), part.v_min(y, x));
                EXPECT_LE(depth.value(y, x), part.v_max(y, x));
            }
        }
    }
}

TEST(SmallEncoderProviderTest, DeterministicPerSeed) {
    const FeatureMap color = synth_color(10, 10);
    const DepthMap lr = synth_depth(5, 5);
    const SmallEncoderProvider a(123, 4);
    const SmallEncoderProvider b(123, 4);
    const SmallEncoderProvider c(124, 4);
    const ProviderOutput oa = a.produce(color, lr);
    const ProviderOutput ob = b.produce(color, lr);
    const ProviderOutput oc = c.produce(color, lr);
    EXPECT_EQ(oa.context.values(), ob.context.values());
    EXPECT_NE(oa.context.values(), oc.context.values());
    ASSERT_EQ(oa.layer_feats.size(), 4u);
    EXPECT_EQ(oa.initial_depth.values(), ob.initial_depth.values());
}

TEST(SmallEncoderProviderTest, ConstantInputGivesConstantFeatures) {
    // Four 3x3 layers have a receptive-field radius of 4; pixels at least
    // that far from every border see identical inputs.
    const FeatureMap color(3, 16, 16, 0.25);
    const DepthMap lr(Grid<double>(16, 16, 40.0));
    const SmallEncoderProvider provider(5, 3);
    const ProviderOutput out = provider.produce(color, lr);
    for (int c = 0; c < out.context.channels(); ++c) {
        const double ref = out.context.at(c, 6, 6);
        for (int y = 4; y < 12; ++y)
            for (int x = 4; x < 12; ++x) EXPECT_NEAR(out.context.at(c, y, x), ref, 1e-12);
    }
}

TEST(SmallEncoderProviderTest, LayersMatchNaiveConvolutionChain) {
    const FeatureMap color = synth_color(8, 8);
    const DepthMap lr = synth_depth(8, 8);
    const SmallEncoderProvider provider(7, 3);
    const ProviderOutput out = provider.produce(color, lr);

    Volume<double> feat = concat_channels(color, depth_as_feature(bicubic_resample(lr, 8, 8))).values();
    for (std::size_t i = 0; i < provider.convs().size(); ++i) {
        feat = testing::naive_conv(feat, provider.convs()[i]);
        for (std::size_t j = 0; j < feat.size(); ++j) feat[j] = std::max(0.0, feat[j]);
        EXPECT_LE(testing::max_abs_diff(out.layer_feats[i].values(), feat), 1e-10);
    }
}

TEST(ResidualDegradationProviderTest, ZeroResidualGivesZeroMap) {
    const DepthMap a = synth_depth(6, 6);
    const ResidualDegradationProvider dp(3);
    const DegradationMap d = dp.estimate(a, a);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) EXPECT_EQ(d.value(y, x), 0.0);
}

TEST(ResidualDegradationProviderTest, ConstantOffsetNormalizesToOne) {
    const DepthMap ref = synth_depth(6, 6);
    Grid<double> shifted = ref.values();
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 1.0;
    const ResidualDegradationProvider dp(3);
    const DegradationMap d = dp.estimate(DepthMap(std::move(shifted)), ref);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) EXPECT_NEAR(d.value(y, x), 1.0, 1e-7);
}

TEST(ResidualDegradationProviderTest, SpikeIsMaximalAtItsLocation) {
    const int side = 9;
    const DepthMap ref(Grid<double>(side, side, 10.0));
    Grid<double> vals(side, side, 10.0);
    vals.at(4, 4) = 20.0;
    const ResidualDegradationProvider dp(3);
    const DegradationMap d = dp.estimate(DepthMap(std::move(vals)), ref);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            if (y == 4 && x == 4) continue;
            EXPECT_LE(d.value(y, x), d.value(4, 4));
        }
    }
    EXPECT_GT(d.value(4, 4), 0.0);
    EXPECT_EQ(d.value(0, 0), 0.0);  // far corner sees no residual
}

}  // namespace
}  // namespace depthbin
