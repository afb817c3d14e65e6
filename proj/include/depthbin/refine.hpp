#pragma once

// Progressive multi-stage driver: each stage re-bins the current estimate's
// per-pixel range, widens the target bin by the local degradation tolerance
// band, predicts a probability distribution over the refreshed candidates,
// and emits the weighted combination as the next estimate. Includes the
// stand-in providers for the out-of-scope pretrained backbone and
// degradation blocks.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "depthbin/binning.hpp"
#include "depthbin/conv.hpp"
#include "depthbin/degrade.hpp"
#include "depthbin/probhead.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

/// Argument tuple of one refinement stage.
struct StageInputs {
    DepthMap coarse;            // current estimate X_i
    FeatureMap layer_feat;      // stage-specific feature G_i
    DegradationMap degradation; // degradation representation D_i
    FeatureMap context;         // fused context feature Y
};

inline ValidationResult check_stage_inputs(const StageInputs& in) {
    const int h = in.coarse.height();
    const int w = in.coarse.width();
    if (in.layer_feat.height() != h || in.layer_feat.width() != w || in.degradation.height() != h ||
        in.degradation.width() != w || in.context.height() != h || in.context.width() != w)
        return ValidationResult::fail(ValidationError::shape_mismatch, "stage input spatial shapes differ");
    return ValidationResult::pass();
}

/// Context feature, per-stage layer features, and an initial depth estimate
/// for the target HR grid (the color image's grid).
struct ProviderOutput {
    FeatureMap context;
    std::vector<FeatureMap> layer_feats;
    DepthMap initial_depth;
};

class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual ProviderOutput produce(const FeatureMap& color, const DepthMap& lr_depth) const = 0;
};

class DegradationProvider {
public:
    virtual ~DegradationProvider() = default;
    virtual DegradationMap estimate(const DepthMap& coarse, const DepthMap& reference) const = 0;
};

/// Per-stage intermediates kept for inspection and tests.
struct RefineTrace {
    std::vector<DepthMap> per_stage_depths;          // X_2 .. X_{S+1}
    std::vector<BinPartition> per_stage_partitions;  // adjusted partitions used per stage
    std::vector<ProbabilityVolume> per_stage_probs;  // head outputs per stage
};

struct StageResult {
    DepthMap depth;
    BinPartition partition;
    ProbabilityVolume probs;
};

struct RefineResult {
    DepthMap depth;
    RefineTrace trace;
};

/// One degradation-driven binning stage. The incoming partition covers the
/// current estimate's plausible range; probabilities start uniform within
/// the stage, the target bin comes from the uniform combination, the range
/// tightens around it (tolerance band gamma * sigma), and the refreshed
/// candidates are weighted by the learned head. The returned partition is
/// the adjusted one the emitted depth lives in.
inline StageResult ddb_stage(const StageInputs& inputs, const BinPartition& partition,
                             const ProbHeadWeights& weights, const HyperParams& hp) {
    require_valid(check_stage_inputs(inputs));
    require_valid(check_hyper_params(hp));
    if (partition.height() != inputs.coarse.height() || partition.width() != inputs.coarse.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "partition and stage input shapes differ");

    // Bin decomposition of the incoming range; uniform probabilities seed
    // the stage, so the target bin is the one holding the range midpoint.
    const CandidateVolume coarse_centers = bin_centers(partition);
    const ProbabilityVolume uniform =
        ProbabilityVolume::uniform(partition.n_bins(), partition.height(), partition.width());
    const DepthMap estimate = combine(coarse_centers, uniform);
    const BinIndexMap target = locate_target_bin(partition, estimate);

    // Degradation-driven range adjustment.
    const LocalStats stats = local_variance(inputs.degradation, hp.neighborhood_k);
    const BinPartition adjusted = adjust_range(partition, target, stats.sigma, hp.gamma);
    const CandidateVolume centers = bin_centers(adjusted);

    // Probability optimization over the refreshed candidates.
    const FeatureMap projected = project_candidates(centers, weights);
    const FeatureMap q = build_gru_input(projected, concat_channels(inputs.context, inputs.layer_feat));
    const FeatureMap hidden0 = init_hidden(inputs.context, weights);
    const FeatureMap hidden = deform_modulate(hidden0, inputs.degradation, weights);
    const FeatureMap hidden_next = conv_gru_step(q, hidden, weights);
    const ProbabilityVolume probs = probability_head(hidden_next, weights);

    DepthMap refined = combine(centers, probs);
    return StageResult{std::move(refined), adjusted, probs};
}

/// Runs the full multi-stage refinement. X_1 is the bicubic upsample of the
/// LR depth onto the color grid; the provider's initial estimate serves as
/// the degradation reference (or `reference` when iterating externally).
inline RefineResult refine_multistage(const FeatureMap& color, const DepthMap& lr_depth,
                                      const FeatureProvider& fp, const DegradationProvider& dp,
                                      const std::vector<ProbHeadWeights>& weights, const HyperParams& hp,
                                      const DepthMap* reference = nullptr) {
    require_valid(check_hyper_params(hp));
    if (static_cast<int>(weights.size()) != hp.n_stages)
        throw ValidationFailure(ValidationError::bad_hyper_params,
                                "expected " + std::to_string(hp.n_stages) + " weight sets, got " +
                                    std::to_string(weights.size()));

    ProviderOutput features = fp.produce(color, lr_depth);
    if (features.layer_feats.empty())
        throw ValidationFailure(ValidationError::bad_hyper_params, "provider returned no layer features");
    const DepthMap& ref = reference ? *reference : features.initial_depth;

    DepthMap current = bicubic_resample(lr_depth, color.height(), color.width());
    BinPartition partition = partition_uniform(current, hp.n_bins);

    RefineTrace trace;
    trace.per_stage_depths.reserve(hp.n_stages);
    trace.per_stage_partitions.reserve(hp.n_stages);
    trace.per_stage_probs.reserve(hp.n_stages);

    for (int stage = 0; stage < hp.n_stages; ++stage) {
        const int li = std::min<int>(stage, static_cast<int>(features.layer_feats.size()) - 1);
        StageInputs inputs{current, features.layer_feats[li], dp.estimate(current, ref), features.context};
        StageResult result = ddb_stage(inputs, partition, weights[stage], hp);
        current = result.depth;
        partition = result.partition;
        trace.per_stage_depths.push_back(result.depth);
        trace.per_stage_partitions.push_back(std::move(result.partition));
        trace.per_stage_probs.push_back(std::move(result.probs));
    }
    return RefineResult{std::move(current), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Stand-in providers
// ---------------------------------------------------------------------------

/// Deterministic 4-layer conv+ReLU encoder over [color; bicubic-upsampled
/// depth]. Layer outputs double as the per-stage features; the last one is
/// the fused context. The initial depth estimate is the bicubic upsample.
class SmallEncoderProvider final : public FeatureProvider {
public:
    SmallEncoderProvider(std::uint64_t seed, int channels) {
        if (channels < 1)
            throw ValidationFailure(ValidationError::bad_hyper_params, "encoder channels must be >= 1");
        Rng rng(seed);
        convs_.push_back(make_seeded_conv(channels, 4, 3, 3, rng));
        for (int i = 1; i < 4; ++i) convs_.push_back(make_seeded_conv(channels, channels, 3, 3, rng));
    }

    ProviderOutput produce(const FeatureMap& color, const DepthMap& lr_depth) const override {
        if (color.channels() != 3)
            throw ValidationFailure(ValidationError::shape_mismatch, "color input must have 3 channels");
        DepthMap upsampled = bicubic_resample(lr_depth, color.height(), color.width());
        FeatureMap feat = concat_channels(color, depth_as_feature(upsampled));
        std::vector<FeatureMap> layers;
        layers.reserve(convs_.size());
        for (const Conv2d& conv : convs_) {
            feat = relu(apply_conv(conv, feat));
            layers.push_back(feat);
        }
        return ProviderOutput{layers.back(), std::move(layers), std::move(upsampled)};
    }

    const std::vector<Conv2d>& convs() const { return convs_; }

private:
    std::vector<Conv2d> convs_;
};

/// Degradation proxy: box-filtered absolute residual between the coarse
/// estimate and the reference, normalized by its image-wide mean (+ 1e-8)
/// so non-trivial outputs have mean about 1. Pixels invalid in either map
/// contribute zero residual.
class ResidualDegradationProvider final : public DegradationProvider {
public:
    explicit ResidualDegradationProvider(int smooth_k) : smooth_k_(smooth_k) {
        if (smooth_k < 1 || smooth_k % 2 == 0)
            throw ValidationFailure(ValidationError::bad_hyper_params, "smooth_k must be odd and >= 1");
    }

    DegradationMap estimate(const DepthMap& coarse, const DepthMap& reference) const override {
        if (!coarse.same_shape(reference))
            throw ValidationFailure(ValidationError::shape_mismatch, "coarse and reference shapes differ");
        const int h = coarse.height();
        const int w = coarse.width();
        const int r = smooth_k_ / 2;
        Grid<double> residual(h, w, 0.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (coarse.valid(y, x) && reference.valid(y, x))
                    residual.at(y, x) = std::abs(coarse.value(y, x) - reference.value(y, x));

        Grid<double> filtered(h, w);
        double total = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                int count = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= w) continue;
                        acc += residual.at(yy, xx);
                        ++count;
                    }
                }
                filtered.at(y, x) = acc / count;
                total += filtered.at(y, x);
            }
        }
        const double mean = total / (static_cast<double>(h) * w);
        for (std::size_t i = 0; i < filtered.size(); ++i) filtered[i] /= mean + 1e-8;
        return DegradationMap(std::move(filtered));
    }

private:
    int smooth_k_;
};

inline std::unique_ptr<FeatureProvider> small_encoder_provider(std::uint64_t seed, int channels) {
    return std::make_unique<SmallEncoderProvider>(seed, channels);
}

inline std::unique_ptr<DegradationProvider> residual_degradation_provider(int smooth_k) {
    return std::make_unique<ResidualDegradationProvider>(smooth_k);
}

}  // namespace depthbin
