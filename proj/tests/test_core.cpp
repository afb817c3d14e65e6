#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "depthbin/types.hpp"

namespace depthbin {
namespace {

TEST(DepthMapTest, AcceptsValidAllPositive) {
    Grid<double> values(2, 3, 1.5);
    const DepthMap map(values);
    EXPECT_EQ(map.height(), 2);
    EXPECT_EQ(map.width(), 3);
    EXPECT_EQ(map.valid_count(), 6);
    EXPECT_TRUE(validate(map).ok());
}

TEST(DepthMapTest, RejectsNonFiniteAtValidPixel) {
    Grid<double> values(2, 2, 1.0);
    values.at(1, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(
        {
            try {
                DepthMap map(values);
            } catch (const ValidationFailure& e) {
                EXPECT_EQ(e.code(), ValidationError::non_finite_value);
                throw;
            }
        },
        ValidationFailure);
}

TEST(DepthMapTest, RejectsNegativeAtValidPixelOnly) {
    Grid<double> values(1, 2, 0.0);
    values.at(0, 1) = -3.0;
    Grid<std::uint8_t> mask(1, 2, 1);
    EXPECT_THROW(DepthMap(values, mask), ValidationFailure);
    mask.at(0, 1) = 0;  // masked-out pixels may hold any finite placeholder
    EXPECT_NO_THROW(DepthMap(values, mask));
}

TEST(DepthMapTest, RejectsMaskShapeMismatch) {
    const ValidationResult r = check_depth_map(Grid<double>(2, 2, 1.0), Grid<std::uint8_t>(2, 3, 1));
    EXPECT_EQ(r.code, ValidationError::shape_mismatch);
}

TEST(ProbabilityVolumeTest, NormalizedByConstructionIsOk) {
    Volume<double> p(4, 2, 2, 0.25);
    EXPECT_TRUE(check_probability_volume(p).ok());
    EXPECT_NO_THROW(ProbabilityVolume{p});
}

TEST(ProbabilityVolumeTest, ReportsUnnormalizedPixel) {
    Volume<double> p(2, 2, 2, 0.5);
    p.at(0, 1, 1) = 0.4;  // that pixel sums to 0.9
    const ValidationResult r = check_probability_volume(p);
    EXPECT_EQ(r.code, ValidationError::unnormalized_probability);
    EXPECT_NE(r.detail.find("(1, 1)"), std::string::npos);
}

TEST(ProbabilityVolumeTest, ReportsNegativeEntryBeforeSum) {
    Volume<double> p(2, 1, 1, 0.5);
    p.at(0, 0, 0) = -0.1;
    p.at(1, 0, 0) = 1.1;
    EXPECT_EQ(check_probability_volume(p).code, ValidationError::negative_probability);
}

TEST(ProbabilityVolumeTest, SumToleranceIsTight) {
    Volume<double> p(1, 1, 1, 1.0 + 2e-9);
    EXPECT_EQ(check_probability_volume(p).code, ValidationError::unnormalized_probability);
    Volume<double> q(1, 1, 1, 1.0 + 5e-10);
    EXPECT_TRUE(check_probability_volume(q).ok());
}

TEST(BinPartitionTest, RejectsInvertedRange) {
    Grid<double> lo(1, 1, 2.0);
    Grid<double> hi(1, 1, 1.0);
    EXPECT_THROW(BinPartition(4, lo, hi), ValidationFailure);
}

TEST(BinPartitionTest, RejectsBadBinCount) {
    Grid<double> lo(1, 1, 0.0);
    Grid<double> hi(1, 1, 1.0);
    EXPECT_THROW(BinPartition(0, lo, hi), ValidationFailure);
}

TEST(BinPartitionTest, DegenerateRangeHasZeroWidth) {
    const BinPartition p(4, Grid<double>(1, 1, 5.0), Grid<double>(1, 1, 5.0));
    EXPECT_EQ(p.bin_width(0, 0), 0.0);
    EXPECT_EQ(p.edge(0, 0, 0), 5.0);
    EXPECT_EQ(p.edge(0, 0, 4), 5.0);
}

TEST(CandidateVolumeTest, RejectsDecreasingCenters) {
    Volume<double> centers(3, 1, 1);
    centers.at(0, 0, 0) = 1.0;
    centers.at(1, 0, 0) = 0.5;
    centers.at(2, 0, 0) = 2.0;
    EXPECT_EQ(check_candidate_volume(centers).code, ValidationError::non_monotone_centers);
}

TEST(BinIndexMapTest, RejectsOutOfRangeIndex) {
    Grid<int> idx(1, 2, 0);
    idx.at(0, 1) = 4;
    EXPECT_EQ(check_bin_index_map(4, idx).code, ValidationError::index_out_of_range);
    idx.at(0, 1) = 3;
    EXPECT_TRUE(check_bin_index_map(4, idx).ok());
}

TEST(DegradationMapTest, RejectsNegative) {
    Grid<double> d(1, 1, -0.5);
    EXPECT_EQ(check_degradation_map(d).code, ValidationError::negative_value);
}

TEST(HyperParamsTest, DefaultsAreValid) {
    EXPECT_TRUE(check_hyper_params(HyperParams{}).ok());
}

TEST(HyperParamsTest, RejectsEvenNeighborhood) {
    HyperParams hp;
    hp.neighborhood_k = 4;
    EXPECT_EQ(check_hyper_params(hp).code, ValidationError::bad_hyper_params);
}

TEST(FeatureMapTest, ZeroChannelMapsAllowed) {
    const FeatureMap empty(0, 2, 2);
    EXPECT_EQ(empty.channels(), 0);
    EXPECT_TRUE(validate(empty).ok());
}

}  // namespace
}  // namespace depthbin
