#pragma once

// Synthetic LR construction from GT depth: separable bicubic resampling
// (Catmull-Rom, a = -0.5, align-corners-false), Gaussian blur, and seeded
// additive Gaussian noise, composed by make_lr.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "depthbin/rng.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

struct DegradeSpec {
    double scale = 4.0;       // e.g. 4.0 for x4; non-integer allowed
    double blur_sigma = 0.0;  // noisy setting: 3.6
    double noise_mean = 0.0;
    double noise_sigma = 0.0;  // noisy setting: 0.07
    std::uint64_t seed = 0;
};

inline ValidationResult check_degrade_spec(const DegradeSpec& spec) {
    if (!(spec.scale > 0.0))
        return ValidationResult::fail(ValidationError::bad_hyper_params, "scale must be > 0");
    if (!(spec.blur_sigma >= 0.0) || !(spec.noise_sigma >= 0.0))
        return ValidationResult::fail(ValidationError::bad_hyper_params, "sigmas must be >= 0");
    if (!std::isfinite(spec.noise_mean))
        return ValidationResult::fail(ValidationError::non_finite_value, "noise mean");
    return ValidationResult::pass();
}

/// Cubic interpolation kernel with a = -0.5 (Catmull-Rom family).
inline double cubic_kernel(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

/// Weights of the four taps at offsets {-1, 0, 1, 2} around floor(src) for
/// fractional position t = src - floor(src). At t = 0.5 these are
/// (-0.0625, 0.5625, 0.5625, -0.0625).
inline std::array<double, 4> cubic_weights(double t) {
    return {cubic_kernel(1.0 + t), cubic_kernel(t), cubic_kernel(1.0 - t), cubic_kernel(2.0 - t)};
}

namespace detail {

// One separable resampling pass along x; edge-clamped taps,
// align-corners-false source mapping.
inline Grid<double> bicubic_pass_x(const Grid<double>& in, int out_w) {
    const int h = in.height();
    const int in_w = in.width();
    Grid<double> out(h, out_w);
    const double ratio = static_cast<double>(in_w) / out_w;
    for (int xo = 0; xo < out_w; ++xo) {
        const double src = (xo + 0.5) * ratio - 0.5;
        const double base = std::floor(src);
        const std::array<double, 4> wts = cubic_weights(src - base);
        std::array<int, 4> taps;
        for (int i = 0; i < 4; ++i)
            taps[i] = std::clamp(static_cast<int>(base) - 1 + i, 0, in_w - 1);
        for (int y = 0; y < h; ++y) {
            const double* row = in.row(y);
            out.at(y, xo) =
                wts[0] * row[taps[0]] + wts[1] * row[taps[1]] + wts[2] * row[taps[2]] + wts[3] * row[taps[3]];
        }
    }
    return out;
}

inline Grid<double> transpose(const Grid<double>& in) {
    Grid<double> out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) out.at(x, y) = in.at(y, x);
    return out;
}

inline Grid<std::uint8_t> nearest_mask(const Grid<std::uint8_t>& in, int out_h, int out_w) {
    Grid<std::uint8_t> out(out_h, out_w);
    const double ry = static_cast<double>(in.height()) / out_h;
    const double rx = static_cast<double>(in.width()) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::clamp(static_cast<int>(std::floor((y + 0.5) * ry)), 0, in.height() - 1);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::clamp(static_cast<int>(std::floor((x + 0.5) * rx)), 0, in.width() - 1);
            out.at(y, x) = in.at(sy, sx);
        }
    }
    return out;
}

}  // namespace detail

/// Separable bicubic resampling to out_h x out_w. When the output size
/// equals the input size every sample lands on an integer position and the
/// result is bit-identical to the input. Interpolation undershoot is clamped
/// at 0 to keep depth non-negative; the validity mask is transported by
/// nearest neighbor.
inline DepthMap bicubic_resample(const DepthMap& depth, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw ValidationFailure(ValidationError::bad_hyper_params, "output size must be >= 1");
    Grid<double> vals = detail::bicubic_pass_x(depth.values(), out_w);
    vals = detail::transpose(detail::bicubic_pass_x(detail::transpose(vals), out_h));
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::max(0.0, vals[i]);
    return DepthMap(std::move(vals), detail::nearest_mask(depth.valid_mask(), out_h, out_w));
}

/// Separable Gaussian blur, kernel radius ceil(3*sigma), renormalized to sum
/// 1, edge-clamped. sigma = 0 is the identity. The mask passes through.
inline DepthMap gaussian_blur(const DepthMap& depth, double sigma) {
    if (!(sigma >= 0.0))
        throw ValidationFailure(ValidationError::bad_hyper_params, "blur sigma must be >= 0");
    if (sigma == 0.0) return depth;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& kv : kernel) kv /= sum;

    const int h = depth.height();
    const int w = depth.width();
    const auto pass = [&](const Grid<double>& in, bool horizontal) {
        Grid<double> out(h, w);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = horizontal ? y : std::clamp(y + i, 0, h - 1);
                    const int xx = horizontal ? std::clamp(x + i, 0, w - 1) : x;
                    acc += kernel[i + radius] * in.at(yy, xx);
                }
                out.at(y, x) = acc;
            }
        }
        return out;
    };
    Grid<double> vals = pass(pass(depth.values(), true), false);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::max(0.0, vals[i]);
    return DepthMap(std::move(vals), Grid<std::uint8_t>(depth.valid_mask()));
}

/// Adds i.i.d. Gaussian noise from the seeded generator, one draw per pixel
/// in row-major order, then clamps at 0. Identical seeds give bit-identical
/// outputs.
inline DepthMap add_gaussian_noise(const DepthMap& depth, double mean, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0))
        throw ValidationFailure(ValidationError::bad_hyper_params, "noise sigma must be >= 0");
    Rng rng(seed);
    Grid<double> vals = depth.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double n = sigma > 0.0 ? sigma * rng.next_normal() : 0.0;
        vals[i] = std::max(0.0, vals[i] + mean + n);
    }
    return DepthMap(std::move(vals), Grid<std::uint8_t>(depth.valid_mask()));
}

/// LR construction: bicubic downsample to round(H/scale) x round(W/scale),
/// then optional blur and noise at LR resolution. Zero-parameter steps are
/// skipped.
inline DepthMap make_lr(const DepthMap& gt, const DegradeSpec& spec) {
    require_valid(check_degrade_spec(spec));
    const int out_h = static_cast<int>(std::lround(gt.height() / spec.scale));
    const int out_w = static_cast<int>(std::lround(gt.width() / spec.scale));
    if (out_h < 1 || out_w < 1)
        throw ValidationFailure(ValidationError::bad_hyper_params,
                                "degenerate LR size " + std::to_string(out_h) + "x" + std::to_string(out_w));
    DepthMap lr = bicubic_resample(gt, out_h, out_w);
    if (spec.blur_sigma > 0.0) lr = gaussian_blur(lr, spec.blur_sigma);
    if (spec.noise_sigma > 0.0 || spec.noise_mean != 0.0)
        lr = add_gaussian_noise(lr, spec.noise_mean, spec.noise_sigma, spec.seed);
    return lr;
}

}  // namespace depthbin
