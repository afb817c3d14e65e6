#pragma once

// Training objective (L1 reconstruction + bi-directional Chamfer bin
// regularizer) and the evaluation metrics (RMSE, MAE, delta accuracies).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "depthbin/rng.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

struct MetricReport {
    double rmse = 0.0;               // cm
    double mae = 0.0;                // cm
    std::array<double, 3> delta{};   // percentages for thresholds 1.05^i, i = 1..3
    std::int64_t valid_pixels = 0;   // m
};

inline std::string to_json_line(const MetricReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"rmse\": " << r.rmse << ", \"mae\": " << r.mae << ", \"delta1\": " << r.delta[0]
       << ", \"delta2\": " << r.delta[1] << ", \"delta3\": " << r.delta[2]
       << ", \"valid_pixels\": " << r.valid_pixels << "}";
    return os.str();
}

/// Mean absolute difference over pixels valid in both maps.
inline double l1_rec(const DepthMap& pred, const DepthMap& gt) {
    if (!pred.same_shape(gt))
        throw ValidationFailure(ValidationError::shape_mismatch, "prediction and GT shapes differ");
    double sum = 0.0;
    std::int64_t m = 0;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
            sum += std::abs(pred.value(y, x) - gt.value(y, x));
            ++m;
        }
    }
    if (m == 0) throw ValidationFailure(ValidationError::no_valid_pixels, "no jointly valid pixels");
    return sum / static_cast<double>(m);
}

/// Bi-directional Chamfer distance between two value sets:
///   sum_z min_c (c - z)^2 + sum_c min_z (c - z)^2.
inline double chamfer_bins(const std::vector<double>& candidates, const std::vector<double>& gt_values) {
    if (candidates.empty() || gt_values.empty())
        throw ValidationFailure(ValidationError::no_valid_pixels, "chamfer over an empty set");
    const auto directed = [](const std::vector<double>& from, const std::vector<double>& to_sorted) {
        double total = 0.0;
        for (double v : from) {
            auto it = std::lower_bound(to_sorted.begin(), to_sorted.end(), v);
            double best = std::numeric_limits<double>::infinity();
            if (it != to_sorted.end()) best = std::min(best, std::abs(*it - v));
            if (it != to_sorted.begin()) best = std::min(best, std::abs(*std::prev(it) - v));
            total += best * best;
        }
        return total;
    };
    std::vector<double> c_sorted = candidates;
    std::vector<double> z_sorted = gt_values;
    std::sort(c_sorted.begin(), c_sorted.end());
    std::sort(z_sorted.begin(), z_sorted.end());
    return directed(gt_values, c_sorted) + directed(candidates, z_sorted);
}

/// Per-image Chamfer terms averaged over a batch.
inline double chamfer_bins_batch(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& batch) {
    if (batch.empty())
        throw ValidationFailure(ValidationError::no_valid_pixels, "chamfer over an empty batch");
    double total = 0.0;
    for (const auto& [candidates, gt_values] : batch) total += chamfer_bins(candidates, gt_values);
    return total / static_cast<double>(batch.size());
}

/// Per-image candidate set: the union of bin centers over pixels, subsampled
/// to at most `max_elements` by a seeded draw without replacement.
inline std::vector<double> collect_candidate_set(const CandidateVolume& centers,
                                                 std::size_t max_elements = 4096,
                                                 std::uint64_t seed = 0) {
    std::vector<double> values(centers.centers().data(), centers.centers().data() + centers.centers().size());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() > max_elements) {
        Rng rng(seed);
        for (std::size_t i = 0; i < max_elements; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (values.size() - i));
            std::swap(values[i], values[j]);
        }
        values.resize(max_elements);
        std::sort(values.begin(), values.end());
    }
    return values;
}

/// Depth values at valid pixels.
inline std::vector<double> collect_valid_depths(const DepthMap& depth) {
    std::vector<double> out;
    out.reserve(depth.values().size());
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x)
            if (depth.valid(y, x)) out.push_back(depth.value(y, x));
    return out;
}

/// Total objective L = L_rec + alpha * L_bin.
inline double total_loss(const DepthMap& pred, const DepthMap& gt, const CandidateVolume& centers,
                         const HyperParams& hp) {
    require_valid(check_hyper_params(hp));
    const double rec = l1_rec(pred, gt);
    const double bin = chamfer_bins(collect_candidate_set(centers, 4096, hp.seed), collect_valid_depths(gt));
    return rec + hp.alpha * bin;
}

/// RMSE / MAE over jointly valid pixels; delta_i over the jointly valid
/// pixels where both depths are strictly positive (the ratio is undefined
/// otherwise), using the strict inequality max(Z/X, X/Z) < 1.05^i.
inline MetricReport metrics(const DepthMap& pred, const DepthMap& gt) {
    if (!pred.same_shape(gt))
        throw ValidationFailure(ValidationError::shape_mismatch, "prediction and GT shapes differ");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    std::int64_t m = 0;
    std::array<std::int64_t, 3> hits{0, 0, 0};
    std::int64_t ratio_pixels = 0;
    const std::array<double, 3> thresholds{1.05, 1.05 * 1.05, 1.05 * 1.05 * 1.05};
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
            const double p = pred.value(y, x);
            const double z = gt.value(y, x);
            const double diff = p - z;
            abs_sum += std::abs(diff);
            sq_sum += diff * diff;
            ++m;
            if (p > 0.0 && z > 0.0) {
                ++ratio_pixels;
                const double ratio = std::max(z / p, p / z);
                for (int i = 0; i < 3; ++i)
                    if (ratio < thresholds[i]) ++hits[i];
            }
        }
    }
    if (m == 0) throw ValidationFailure(ValidationError::no_valid_pixels, "no jointly valid pixels");
    MetricReport report;
    report.mae = abs_sum / static_cast<double>(m);
    report.rmse = std::sqrt(sq_sum / static_cast<double>(m));
    report.valid_pixels = m;
    for (int i = 0; i < 3; ++i)
        report.delta[i] = ratio_pixels > 0
                              ? 100.0 * static_cast<double>(hits[i]) / static_cast<double>(ratio_pixels)
                              : 0.0;
    return report;
}

}  // namespace depthbin
