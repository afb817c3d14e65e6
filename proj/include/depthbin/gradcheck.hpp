#pragma once

// Analytic gradients through the differentiable tail of the pipeline
// (logits -> softmax -> weighted combination -> L1 reconstruction) and a
// central finite-difference comparator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "depthbin/probhead.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

struct GradReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::int64_t n_params_checked = 0;
    double step = 0.0;
};

inline std::string to_json_line(const GradReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"max_rel_error\": " << r.max_rel_error << ", \"max_abs_error\": " << r.max_abs_error
       << ", \"n_params_checked\": " << r.n_params_checked << ", \"step\": " << r.step << "}";
    return os.str();
}

/// Forward value of the checked path: X = sum_n C_n * softmax(logits)_n per
/// pixel, L = (1/m) * sum over valid GT pixels of |X - Z|.
inline double combine_l1_loss(const FeatureMap& logits, const CandidateVolume& centers,
                              const DepthMap& gt) {
    if (logits.channels() != centers.n_bins() || logits.height() != centers.height() ||
        logits.width() != centers.width() || centers.height() != gt.height() ||
        centers.width() != gt.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "logits/centers/GT shapes differ");
    const ProbabilityVolume probs = softmax_bins(logits);
    double sum = 0.0;
    std::int64_t m = 0;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (!gt.valid(y, x)) continue;
            double v = 0.0;
            for (int n = 0; n < centers.n_bins(); ++n) v += centers.center(n, y, x) * probs.prob(n, y, x);
            sum += std::abs(v - gt.value(y, x));
            ++m;
        }
    }
    if (m == 0) throw ValidationFailure(ValidationError::no_valid_pixels, "no valid GT pixels");
    return sum / static_cast<double>(m);
}

/// Analytic gradient of combine_l1_loss with respect to the logits:
///   dL/dlogit_n(p) = (1/m) * sign(X(p) - Z(p)) * P_n(p) * (C_n(p) - X(p)),
/// with sign(0) = 0. Pixels invalid in the GT contribute zero gradient.
inline FeatureMap grad_combine_l1(const FeatureMap& logits, const CandidateVolume& centers,
                                  const DepthMap& gt) {
    if (logits.channels() != centers.n_bins() || logits.height() != centers.height() ||
        logits.width() != centers.width() || centers.height() != gt.height() ||
        centers.width() != gt.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "logits/centers/GT shapes differ");
    const ProbabilityVolume probs = softmax_bins(logits);
    std::int64_t m = 0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt.valid(y, x)) ++m;
    if (m == 0) throw ValidationFailure(ValidationError::no_valid_pixels, "no valid GT pixels");

    Volume<double> grad(logits.channels(), logits.height(), logits.width(), 0.0);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (!gt.valid(y, x)) continue;
            double v = 0.0;
            for (int n = 0; n < centers.n_bins(); ++n) v += centers.center(n, y, x) * probs.prob(n, y, x);
            const double diff = v - gt.value(y, x);
            const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            for (int n = 0; n < centers.n_bins(); ++n)
                grad.at(n, y, x) = inv_m * s * probs.prob(n, y, x) * (centers.center(n, y, x) - v);
        }
    }
    return FeatureMap(std::move(grad));
}

/// Central finite differences (f(t+h e) - f(t-h e)) / (2h) per coordinate,
/// compared against the supplied analytic gradient. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-12).
inline GradReport finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> params, const std::vector<double>& analytic_grad,
                                    double step) {
    if (!(step > 0.0))
        throw ValidationFailure(ValidationError::bad_hyper_params, "finite-difference step must be > 0");
    if (params.size() != analytic_grad.size())
        throw ValidationFailure(ValidationError::shape_mismatch, "parameter and gradient sizes differ");
    GradReport report;
    report.step = step;
    report.n_params_checked = static_cast<std::int64_t>(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double original = params[i];
        params[i] = original + step;
        const double hi = f(params);
        params[i] = original - step;
        const double lo = f(params);
        params[i] = original;
        if (!std::isfinite(hi) || !std::isfinite(lo))
            throw ValidationFailure(ValidationError::non_finite_value,
                                    "function value at perturbed coordinate " + std::to_string(i));
        const double numeric = (hi - lo) / (2.0 * step);
        const double abs_err = std::abs(numeric - analytic_grad[i]);
        const double denom = std::max({std::abs(numeric), std::abs(analytic_grad[i]), 1e-12});
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
    }
    return report;
}

}  // namespace depthbin
