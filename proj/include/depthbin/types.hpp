#pragma once

// Shared value types of the depth refinement pipeline. Every type validates
// its invariants at construction and is immutable afterwards, so instances
// are safe to share read-only across threads.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "depthbin/grid.hpp"

namespace depthbin {

enum class ValidationError {
    ok,
    shape_mismatch,
    non_finite_value,
    negative_value,
    negative_probability,
    unnormalized_probability,
    bad_bin_count,
    bad_range,
    non_monotone_centers,
    index_out_of_range,
    empty_valid_mask,
    no_valid_pixels,
    bad_hyper_params,
};

inline const char* to_string(ValidationError e) {
    switch (e) {
        case ValidationError::ok: return "ok";
        case ValidationError::shape_mismatch: return "shape-mismatch";
        case ValidationError::non_finite_value: return "non-finite-value";
        case ValidationError::negative_value: return "negative-value";
        case ValidationError::negative_probability: return "negative-probability";
        case ValidationError::unnormalized_probability: return "unnormalized-probability";
        case ValidationError::bad_bin_count: return "bad-bin-count";
        case ValidationError::bad_range: return "bad-range";
        case ValidationError::non_monotone_centers: return "non-monotone-centers";
        case ValidationError::index_out_of_range: return "index-out-of-range";
        case ValidationError::empty_valid_mask: return "empty-valid-mask";
        case ValidationError::no_valid_pixels: return "no-valid-pixels";
        case ValidationError::bad_hyper_params: return "bad-hyper-params";
    }
    return "unknown";
}

struct ValidationResult {
    ValidationError code = ValidationError::ok;
    std::string detail;

    bool ok() const { return code == ValidationError::ok; }
    static ValidationResult pass() { return {}; }
    static ValidationResult fail(ValidationError c, std::string d) { return {c, std::move(d)}; }
};

class ValidationFailure : public std::runtime_error {
public:
    ValidationFailure(ValidationError code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    ValidationError code() const { return code_; }

private:
    ValidationError code_;
};

inline void require_valid(const ValidationResult& r) {
    if (!r.ok()) throw ValidationFailure(r.code, r.detail);
}

inline std::string pixel_str(int y, int x) {
    return "pixel (" + std::to_string(y) + ", " + std::to_string(x) + ")";
}

// ---------------------------------------------------------------------------
// Raw-part checkers. Constructors funnel through these; they are also exposed
// so callers can probe unvalidated data without triggering exceptions.
// ---------------------------------------------------------------------------

inline ValidationResult check_depth_map(const Grid<double>& values, const Grid<std::uint8_t>& valid_mask) {
    if (!values.same_shape(valid_mask) || values.empty())
        return ValidationResult::fail(ValidationError::shape_mismatch,
                                      "depth values and valid mask shapes differ");
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            const double v = values.at(y, x);
            if (!std::isfinite(v))
                return ValidationResult::fail(ValidationError::non_finite_value,
                                              "depth at " + pixel_str(y, x));
            if (valid_mask.at(y, x) && v < 0.0)
                return ValidationResult::fail(ValidationError::negative_value,
                                              "depth at valid " + pixel_str(y, x));
        }
    }
    return ValidationResult::pass();
}

inline ValidationResult check_feature_map(const Volume<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            return ValidationResult::fail(ValidationError::non_finite_value,
                                          "feature element " + std::to_string(i));
    }
    return ValidationResult::pass();
}

inline ValidationResult check_degradation_map(const Grid<double>& values) {
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            const double v = values.at(y, x);
            if (!std::isfinite(v))
                return ValidationResult::fail(ValidationError::non_finite_value,
                                              "degradation at " + pixel_str(y, x));
            if (v < 0.0)
                return ValidationResult::fail(ValidationError::negative_value,
                                              "degradation at " + pixel_str(y, x));
        }
    }
    return ValidationResult::pass();
}

inline ValidationResult check_bin_partition(int n_bins, const Grid<double>& v_min, const Grid<double>& v_max) {
    if (n_bins < 1)
        return ValidationResult::fail(ValidationError::bad_bin_count,
                                      "n_bins = " + std::to_string(n_bins));
    if (!v_min.same_shape(v_max))
        return ValidationResult::fail(ValidationError::shape_mismatch, "v_min and v_max shapes differ");
    for (int y = 0; y < v_min.height(); ++y) {
        for (int x = 0; x < v_min.width(); ++x) {
            const double lo = v_min.at(y, x);
            const double hi = v_max.at(y, x);
            if (!std::isfinite(lo) || !std::isfinite(hi))
                return ValidationResult::fail(ValidationError::non_finite_value,
                                              "range at " + pixel_str(y, x));
            if (lo > hi)
                return ValidationResult::fail(ValidationError::bad_range,
                                              "v_min > v_max at " + pixel_str(y, x));
        }
    }
    return ValidationResult::pass();
}

inline ValidationResult check_candidate_volume(const Volume<double>& centers) {
    if (centers.channels() < 1)
        return ValidationResult::fail(ValidationError::bad_bin_count, "candidate volume has no bins");
    for (int y = 0; y < centers.height(); ++y) {
        for (int x = 0; x < centers.width(); ++x) {
            for (int n = 0; n < centers.channels(); ++n) {
                const double c = centers.at(n, y, x);
                if (!std::isfinite(c))
                    return ValidationResult::fail(ValidationError::non_finite_value,
                                                  "center " + std::to_string(n) + " at " + pixel_str(y, x));
                if (n > 0 && c < centers.at(n - 1, y, x))
                    return ValidationResult::fail(ValidationError::non_monotone_centers,
                                                  "center " + std::to_string(n) + " at " + pixel_str(y, x));
            }
        }
    }
    return ValidationResult::pass();
}

inline constexpr double kProbabilitySumTolerance = 1e-9;

inline ValidationResult check_probability_volume(const Volume<double>& probs) {
    if (probs.channels() < 1)
        return ValidationResult::fail(ValidationError::bad_bin_count, "probability volume has no bins");
    for (int y = 0; y < probs.height(); ++y) {
        for (int x = 0; x < probs.width(); ++x) {
            double sum = 0.0;
            for (int n = 0; n < probs.channels(); ++n) {
                const double p = probs.at(n, y, x);
                if (!std::isfinite(p))
                    return ValidationResult::fail(ValidationError::non_finite_value,
                                                  "probability " + std::to_string(n) + " at " + pixel_str(y, x));
                if (p < 0.0)
                    return ValidationResult::fail(ValidationError::negative_probability,
                                                  "probability " + std::to_string(n) + " at " + pixel_str(y, x));
                sum += p;
            }
            if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
                return ValidationResult::fail(ValidationError::unnormalized_probability,
                                              "sum " + std::to_string(sum) + " at " + pixel_str(y, x));
        }
    }
    return ValidationResult::pass();
}

inline ValidationResult check_bin_index_map(int n_bins, const Grid<int>& indices) {
    if (n_bins < 1)
        return ValidationResult::fail(ValidationError::bad_bin_count,
                                      "n_bins = " + std::to_string(n_bins));
    for (int y = 0; y < indices.height(); ++y) {
        for (int x = 0; x < indices.width(); ++x) {
            const int n = indices.at(y, x);
            if (n < 0 || n >= n_bins)
                return ValidationResult::fail(ValidationError::index_out_of_range,
                                              "index " + std::to_string(n) + " at " + pixel_str(y, x));
        }
    }
    return ValidationResult::pass();
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// H x W depth values in centimeters plus a per-pixel validity mask.
/// Invalid pixels hold finite placeholder values (conventionally 0) so that
/// whole-grid operations stay well defined; reductions skip them via the mask.
class DepthMap {
public:
    DepthMap(Grid<double> values, Grid<std::uint8_t> valid_mask)
        : values_(std::move(values)), mask_(std::move(valid_mask)) {
        require_valid(check_depth_map(values_, mask_));
    }
    /// All-pixels-valid convenience constructor.
    explicit DepthMap(Grid<double> values)
        : values_(std::move(values)), mask_(values_.height(), values_.width(), 1) {
        require_valid(check_depth_map(values_, mask_));
    }

    int height() const { return values_.height(); }
    int width() const { return values_.width(); }
    double value(int y, int x) const { return values_.at(y, x); }
    bool valid(int y, int x) const { return mask_.at(y, x) != 0; }
    std::int64_t valid_count() const {
        std::int64_t m = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i) m += mask_[i] ? 1 : 0;
        return m;
    }

    const Grid<double>& values() const { return values_; }
    const Grid<std::uint8_t>& valid_mask() const { return mask_; }

    bool same_shape(const DepthMap& other) const { return values_.same_shape(other.values_); }
    bool operator==(const DepthMap& other) const = default;

private:
    Grid<double> values_;
    Grid<std::uint8_t> mask_;
};

/// C x H x W real feature tensor (unitless).
class FeatureMap {
public:
    explicit FeatureMap(Volume<double> values) : values_(std::move(values)) {
        require_valid(check_feature_map(values_));
    }
    FeatureMap(int channels, int height, int width, double fill = 0.0)
        : FeatureMap(Volume<double>(channels, height, width, fill)) {}

    int channels() const { return values_.channels(); }
    int height() const { return values_.height(); }
    int width() const { return values_.width(); }
    double at(int c, int y, int x) const { return values_.at(c, y, x); }
    const Volume<double>& values() const { return values_; }

    bool same_shape(const FeatureMap& other) const { return values_.same_shape(other.values_); }
    bool operator==(const FeatureMap& other) const = default;

private:
    Volume<double> values_;
};

/// H x W non-negative degradation magnitudes (unitless).
class DegradationMap {
public:
    explicit DegradationMap(Grid<double> values) : values_(std::move(values)) {
        require_valid(check_degradation_map(values_));
    }

    int height() const { return values_.height(); }
    int width() const { return values_.width(); }
    double value(int y, int x) const { return values_.at(y, x); }
    const Grid<double>& values() const { return values_; }
    bool operator==(const DegradationMap& other) const = default;

private:
    Grid<double> values_;
};

/// Per-pixel depth interval [v_min, v_max] uniformly split into n_bins bins.
class BinPartition {
public:
    BinPartition(int n_bins, Grid<double> v_min, Grid<double> v_max)
        : n_bins_(n_bins), v_min_(std::move(v_min)), v_max_(std::move(v_max)) {
        require_valid(check_bin_partition(n_bins_, v_min_, v_max_));
    }

    int n_bins() const { return n_bins_; }
    int height() const { return v_min_.height(); }
    int width() const { return v_min_.width(); }
    double v_min(int y, int x) const { return v_min_.at(y, x); }
    double v_max(int y, int x) const { return v_max_.at(y, x); }
    double bin_width(int y, int x) const { return (v_max(y, x) - v_min(y, x)) / n_bins_; }
    /// n-th bin edge, n in [0, n_bins].
    double edge(int y, int x, int n) const { return v_min(y, x) + n * bin_width(y, x); }

    const Grid<double>& v_min_grid() const { return v_min_; }
    const Grid<double>& v_max_grid() const { return v_max_; }
    bool operator==(const BinPartition& other) const = default;

private:
    int n_bins_ = 0;
    Grid<double> v_min_;
    Grid<double> v_max_;
};

/// N x H x W depth candidates (bin centers), non-decreasing along the bin axis.
class CandidateVolume {
public:
    explicit CandidateVolume(Volume<double> centers) : centers_(std::move(centers)) {
        require_valid(check_candidate_volume(centers_));
    }

    int n_bins() const { return centers_.channels(); }
    int height() const { return centers_.height(); }
    int width() const { return centers_.width(); }
    double center(int n, int y, int x) const { return centers_.at(n, y, x); }
    const Volume<double>& centers() const { return centers_; }
    bool operator==(const CandidateVolume& other) const = default;

private:
    Volume<double> centers_;
};

/// N x H x W non-negative weights summing to 1 (within 1e-9) at every pixel.
class ProbabilityVolume {
public:
    explicit ProbabilityVolume(Volume<double> probs) : probs_(std::move(probs)) {
        require_valid(check_probability_volume(probs_));
    }
    static ProbabilityVolume uniform(int n_bins, int height, int width) {
        return ProbabilityVolume(Volume<double>(n_bins, height, width, 1.0 / n_bins));
    }
    static ProbabilityVolume one_hot(int n_bins, const Grid<int>& indices) {
        Volume<double> p(n_bins, indices.height(), indices.width(), 0.0);
        for (int y = 0; y < indices.height(); ++y)
            for (int x = 0; x < indices.width(); ++x) p.at(indices.at(y, x), y, x) = 1.0;
        return ProbabilityVolume(std::move(p));
    }

    int n_bins() const { return probs_.channels(); }
    int height() const { return probs_.height(); }
    int width() const { return probs_.width(); }
    double prob(int n, int y, int x) const { return probs_.at(n, y, x); }
    const Volume<double>& probs() const { return probs_; }
    bool operator==(const ProbabilityVolume& other) const = default;

private:
    Volume<double> probs_;
};

/// H x W target-bin indices, each within [0, n_bins - 1].
class BinIndexMap {
public:
    BinIndexMap(int n_bins, Grid<int> indices) : n_bins_(n_bins), indices_(std::move(indices)) {
        require_valid(check_bin_index_map(n_bins_, indices_));
    }

    int n_bins() const { return n_bins_; }
    int height() const { return indices_.height(); }
    int width() const { return indices_.width(); }
    int index(int y, int x) const { return indices_.at(y, x); }
    const Grid<int>& indices() const { return indices_; }
    bool operator==(const BinIndexMap& other) const = default;

private:
    int n_bins_ = 0;
    Grid<int> indices_;
};

struct HyperParams {
    int n_bins = 32;
    int n_stages = 4;
    double gamma = 0.2;
    int neighborhood_k = 3;
    double alpha = 0.1;
    int hidden_channels = 64;
    std::uint64_t seed = 0;
};

inline ValidationResult check_hyper_params(const HyperParams& hp) {
    if (hp.n_bins < 1) return ValidationResult::fail(ValidationError::bad_hyper_params, "n_bins < 1");
    if (hp.n_stages < 1) return ValidationResult::fail(ValidationError::bad_hyper_params, "n_stages < 1");
    if (!(hp.gamma >= 0.0)) return ValidationResult::fail(ValidationError::bad_hyper_params, "gamma < 0");
    if (hp.neighborhood_k < 1 || hp.neighborhood_k % 2 == 0)
        return ValidationResult::fail(ValidationError::bad_hyper_params, "neighborhood_k must be odd and >= 1");
    if (!(hp.alpha >= 0.0)) return ValidationResult::fail(ValidationError::bad_hyper_params, "alpha < 0");
    if (hp.hidden_channels < 1)
        return ValidationResult::fail(ValidationError::bad_hyper_params, "hidden_channels < 1");
    return ValidationResult::pass();
}

// Re-checks of already constructed values, for callers that want a result
// object instead of trusting construction-time enforcement.
inline ValidationResult validate(const DepthMap& m) { return check_depth_map(m.values(), m.valid_mask()); }
inline ValidationResult validate(const FeatureMap& m) { return check_feature_map(m.values()); }
inline ValidationResult validate(const DegradationMap& m) { return check_degradation_map(m.values()); }
inline ValidationResult validate(const BinPartition& p) {
    return check_bin_partition(p.n_bins(), p.v_min_grid(), p.v_max_grid());
}
inline ValidationResult validate(const CandidateVolume& v) { return check_candidate_volume(v.centers()); }
inline ValidationResult validate(const ProbabilityVolume& v) { return check_probability_volume(v.probs()); }
inline ValidationResult validate(const BinIndexMap& m) { return check_bin_index_map(m.n_bins(), m.indices()); }
inline ValidationResult validate(const HyperParams& hp) { return check_hyper_params(hp); }

}  // namespace depthbin
