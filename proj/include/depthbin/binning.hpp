#pragma once

// Bin decomposition and degradation-driven bin range adjustment: uniform
// partitioning of per-pixel depth ranges, bin centers, probability-weighted
// combination, target-bin lookup, local degradation statistics, and the
// tolerance-band range update.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "depthbin/types.hpp"

namespace depthbin {

/// Local mean / variance / standard deviation of a degradation map.
struct LocalStats {
    Grid<double> mean;
    Grid<double> variance;
    Grid<double> sigma;
};

/// Uniform partition over an explicit per-pixel range.
inline BinPartition partition_uniform(Grid<double> v_min, Grid<double> v_max, int n_bins) {
    return BinPartition(n_bins, std::move(v_min), std::move(v_max));
}

/// Uniform partition whose range is the image-wide valid [min, max] of
/// `depth`, broadcast to every pixel. This is the stage-1 initialization;
/// later stages carry per-pixel adjusted ranges instead.
inline BinPartition partition_uniform(const DepthMap& depth, int n_bins) {
    if (n_bins < 1)
        throw ValidationFailure(ValidationError::bad_bin_count, "n_bins = " + std::to_string(n_bins));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (!depth.valid(y, x)) continue;
            lo = std::min(lo, depth.value(y, x));
            hi = std::max(hi, depth.value(y, x));
        }
    }
    if (!(lo <= hi))
        throw ValidationFailure(ValidationError::empty_valid_mask, "no valid pixels to derive a range from");
    return BinPartition(n_bins, Grid<double>(depth.height(), depth.width(), lo),
                        Grid<double>(depth.height(), depth.width(), hi));
}

/// Per-pixel bin centers: C_n = (u_n + u_{n+1}) / 2 for n = 0..N-1.
inline CandidateVolume bin_centers(const BinPartition& partition) {
    const int n_bins = partition.n_bins();
    Volume<double> centers(n_bins, partition.height(), partition.width());
    for (int y = 0; y < partition.height(); ++y) {
        for (int x = 0; x < partition.width(); ++x) {
            for (int n = 0; n < n_bins; ++n)
                centers.at(n, y, x) = 0.5 * (partition.edge(y, x, n) + partition.edge(y, x, n + 1));
        }
    }
    return CandidateVolume(std::move(centers));
}

/// Probability-weighted combination of depth candidates. The result is
/// clamped into [min_n C_n, max_n C_n] at each pixel so the combination
/// bound holds exactly despite rounding.
inline DepthMap combine(const CandidateVolume& centers, const ProbabilityVolume& probs) {
    if (centers.n_bins() != probs.n_bins() || centers.height() != probs.height() ||
        centers.width() != probs.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "candidate and probability volumes differ");
    const int n_bins = centers.n_bins();
    Grid<double> out(centers.height(), centers.width());
    for (int y = 0; y < centers.height(); ++y) {
        for (int x = 0; x < centers.width(); ++x) {
            double acc = 0.0;
            for (int n = 0; n < n_bins; ++n) acc += centers.center(n, y, x) * probs.prob(n, y, x);
            // Centers are non-decreasing along n, so bins 0 and N-1 bound them.
            const double lo = centers.center(0, y, x);
            const double hi = centers.center(n_bins - 1, y, x);
            out.at(y, x) = std::clamp(acc, lo, hi);
        }
    }
    return DepthMap(std::move(out));
}

/// Index of the bin whose edges enclose depth(p): the greatest n with
/// u_n <= depth(p), clamped to [0, N-1]. Interior edge ties therefore go to
/// the higher-indexed bin and depth == v_max lands in bin N-1. Out-of-range
/// depths are clamped into the range first; `clamped_count`, when non-null,
/// receives the number of pixels that needed clamping.
inline BinIndexMap locate_target_bin(const BinPartition& partition, const DepthMap& depth,
                                     std::int64_t* clamped_count = nullptr) {
    if (partition.height() != depth.height() || partition.width() != depth.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "partition and depth shapes differ");
    const int n_bins = partition.n_bins();
    Grid<int> indices(depth.height(), depth.width());
    std::int64_t clamped = 0;
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const double lo = partition.v_min(y, x);
            const double hi = partition.v_max(y, x);
            double v = depth.value(y, x);
            if (v < lo || v > hi) {
                v = std::clamp(v, lo, hi);
                ++clamped;
            }
            const double w = partition.bin_width(y, x);
            int n;
            if (w > 0.0) {
                n = std::clamp(static_cast<int>(std::floor((v - lo) / w)), 0, n_bins - 1);
                // Fix up rounding so n is exactly the greatest index with u_n <= v.
                while (n < n_bins - 1 && partition.edge(y, x, n + 1) <= v) ++n;
                while (n > 0 && partition.edge(y, x, n) > v) --n;
            } else {
                n = n_bins - 1;  // degenerate range: every edge coincides
            }
            indices.at(y, x) = n;
        }
    }
    if (clamped_count) *clamped_count = clamped;
    return BinIndexMap(n_bins, std::move(indices));
}

/// Mean and population variance of the degradation over k x k neighborhoods,
/// computed by the defining two-pass formula (mean first, then squared
/// deviations) so near-zero variances do not suffer cancellation. Border
/// neighborhoods truncate to the pixels actually inside the image.
inline LocalStats local_variance(const DegradationMap& deg, int k) {
    if (k < 1 || k % 2 == 0)
        throw ValidationFailure(ValidationError::bad_hyper_params,
                                "neighborhood k must be odd and >= 1, got " + std::to_string(k));
    const int h = deg.height();
    const int w = deg.width();
    const int r = k / 2;

    LocalStats stats{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w)};
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            const double count = static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
            double sum = 0.0;
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) sum += deg.value(yy, xx);
            const double mu = sum / count;
            double sq = 0.0;
            for (int yy = y0; yy <= y1; ++yy) {
                for (int xx = x0; xx <= x1; ++xx) {
                    const double d = deg.value(yy, xx) - mu;
                    sq += d * d;
                }
            }
            const double var = sq / count;
            stats.mean.at(y, x) = mu;
            stats.variance.at(y, x) = var;
            stats.sigma.at(y, x) = std::sqrt(var);
        }
    }
    return stats;
}

/// Expands each pixel's target bin [u_n, u_{n+1}] by the tolerance band
/// gamma * sigma(p) on both sides. The lower bound clamps at 0 (depth
/// non-negativity); the upper bound never drops below the lower one.
inline BinPartition adjust_range(const BinPartition& partition, const BinIndexMap& target,
                                 const Grid<double>& sigma, double gamma) {
    if (partition.height() != target.height() || partition.width() != target.width() ||
        sigma.height() != partition.height() || sigma.width() != partition.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "adjust_range input shapes differ");
    if (!(gamma >= 0.0))
        throw ValidationFailure(ValidationError::bad_hyper_params, "gamma must be >= 0");
    if (target.n_bins() != partition.n_bins())
        throw ValidationFailure(ValidationError::bad_bin_count, "target bin count differs from partition");

    Grid<double> new_min(partition.height(), partition.width());
    Grid<double> new_max(partition.height(), partition.width());
    for (int y = 0; y < partition.height(); ++y) {
        for (int x = 0; x < partition.width(); ++x) {
            const double s = sigma.at(y, x);
            if (!std::isfinite(s))
                throw ValidationFailure(ValidationError::non_finite_value, "sigma at " + pixel_str(y, x));
            if (s < 0.0)
                throw ValidationFailure(ValidationError::negative_value, "sigma at " + pixel_str(y, x));
            const int n = target.index(y, x);
            const double band = gamma * s;
            const double lo = std::max(0.0, partition.edge(y, x, n) - band);
            const double hi = std::max(lo, partition.edge(y, x, n + 1) + band);
            new_min.at(y, x) = lo;
            new_max.at(y, x) = hi;
        }
    }
    return BinPartition(partition.n_bins(), std::move(new_min), std::move(new_max));
}

}  // namespace depthbin
