#pragma once

// Dense 2-D convolution (cross-correlation) with "same" zero padding, plus
// the channel-wise helpers and activations used by the probability head and
// the stand-in feature encoder. All feature maps keep their spatial shape.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "depthbin/rng.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

/// Convolution weights laid out [out_channel][in_channel][ky][kx] plus one
/// bias per output channel. Kernel sides must be odd ("same" padding).
struct Conv2d {
    int out_channels = 0;
    int in_channels = 0;
    int kh = 0;
    int kw = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& weight(int co, int ci, int ky, int kx) {
        return weights[((static_cast<std::size_t>(co) * in_channels + ci) * kh + ky) * kw + kx];
    }
    double weight(int co, int ci, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(co) * in_channels + ci) * kh + ky) * kw + kx];
    }
};

inline Conv2d make_zero_conv(int out_channels, int in_channels, int kh, int kw) {
    if (out_channels < 1 || in_channels < 1 || kh < 1 || kw < 1 || kh % 2 == 0 || kw % 2 == 0)
        throw ValidationFailure(ValidationError::bad_hyper_params, "conv kernel dims must be odd and >= 1");
    Conv2d c{out_channels, in_channels, kh, kw, {}, {}};
    c.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kh * kw, 0.0);
    c.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    return c;
}

/// Weights drawn uniformly from [-s, s] with s = 1/sqrt(fan_in); biases zero.
inline Conv2d make_seeded_conv(int out_channels, int in_channels, int kh, int kw, Rng& rng) {
    Conv2d c = make_zero_conv(out_channels, in_channels, kh, kw);
    const double s = 1.0 / std::sqrt(static_cast<double>(in_channels) * kh * kw);
    for (double& w : c.weights) w = rng.next_uniform(-s, s);
    return c;
}

namespace detail {

// Generic direct convolution, one kernel tap per pass.
inline void conv_generic(const Conv2d& conv, const Volume<double>& in, Volume<double>& out) {
    const int h = in.height();
    const int w = in.width();
    const int ph = conv.kh / 2;
    const int pw = conv.kw / 2;
    for (int co = 0; co < conv.out_channels; ++co) {
        double* plane = out.plane(co);
        const double b = conv.bias[co];
        for (std::size_t i = 0; i < out.plane_size(); ++i) plane[i] = b;
        for (int ci = 0; ci < conv.in_channels; ++ci) {
            for (int ky = 0; ky < conv.kh; ++ky) {
                const int dy = ky - ph;
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(h, h - dy);
                for (int kx = 0; kx < conv.kw; ++kx) {
                    const int dx = kx - pw;
                    const double wgt = conv.weight(co, ci, ky, kx);
                    if (wgt == 0.0) continue;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    for (int y = y0; y < y1; ++y) {
                        // out is freshly allocated, so the rows cannot alias.
                        const double* __restrict src = in.row(ci, y + dy) + dx;
                        double* __restrict dst = out.row(co, y);
                        for (int x = x0; x < x1; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    }
}

// 3x3 fast path: zero-pads every input plane once, then fuses all nine taps
// of a channel into a single pass over each output row.
inline void conv_3x3_padded(const Conv2d& conv, const Volume<double>& in, Volume<double>& out) {
    const int h = in.height();
    const int w = in.width();
    const int pw = w + 2;
    std::vector<double> padded(static_cast<std::size_t>(in.channels()) * (h + 2) * pw, 0.0);
    for (int ci = 0; ci < in.channels(); ++ci) {
        double* dst = padded.data() + static_cast<std::size_t>(ci) * (h + 2) * pw;
        for (int y = 0; y < h; ++y)
            std::copy(in.row(ci, y), in.row(ci, y) + w, dst + static_cast<std::size_t>(y + 1) * pw + 1);
    }

    for (int co = 0; co < conv.out_channels; ++co) {
        double* plane = out.plane(co);
        const double b = conv.bias[co];
        for (std::size_t i = 0; i < out.plane_size(); ++i) plane[i] = b;
        for (int ci = 0; ci < conv.in_channels; ++ci) {
            const double* base = padded.data() + static_cast<std::size_t>(ci) * (h + 2) * pw;
            const double w00 = conv.weight(co, ci, 0, 0), w01 = conv.weight(co, ci, 0, 1),
                         w02 = conv.weight(co, ci, 0, 2);
            const double w10 = conv.weight(co, ci, 1, 0), w11 = conv.weight(co, ci, 1, 1),
                         w12 = conv.weight(co, ci, 1, 2);
            const double w20 = conv.weight(co, ci, 2, 0), w21 = conv.weight(co, ci, 2, 1),
                         w22 = conv.weight(co, ci, 2, 2);
            for (int y = 0; y < h; ++y) {
                const double* __restrict r0 = base + static_cast<std::size_t>(y) * pw;
                const double* __restrict r1 = r0 + pw;
                const double* __restrict r2 = r1 + pw;
                double* __restrict dst = out.row(co, y);
                for (int x = 0; x < w; ++x) {
                    dst[x] += w00 * r0[x] + w01 * r0[x + 1] + w02 * r0[x + 2] + w10 * r1[x] +
                              w11 * r1[x + 1] + w12 * r1[x + 2] + w20 * r2[x] + w21 * r2[x + 1] +
                              w22 * r2[x + 2];
                }
            }
        }
    }
}

}  // namespace detail

inline FeatureMap apply_conv(const Conv2d& conv, const FeatureMap& input) {
    if (input.channels() != conv.in_channels)
        throw ValidationFailure(ValidationError::shape_mismatch,
                                "conv expects " + std::to_string(conv.in_channels) + " channels, got " +
                                    std::to_string(input.channels()));
    Volume<double> out(conv.out_channels, input.height(), input.width());
    if (conv.kh == 3 && conv.kw == 3)
        detail::conv_3x3_padded(conv, input.values(), out);
    else
        detail::conv_generic(conv, input.values(), out);
    return FeatureMap(std::move(out));
}

inline FeatureMap relu(const FeatureMap& input) {
    Volume<double> out = input.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return FeatureMap(std::move(out));
}

inline FeatureMap tanh_map(const FeatureMap& input) {
    Volume<double> out = input.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    return FeatureMap(std::move(out));
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Channel-wise concatenation [a; b]; spatial shapes must match.
inline FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "concat spatial shapes differ");
    Volume<double> out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.values().data(), a.values().data() + a.values().size(), out.data());
    std::copy(b.values().data(), b.values().data() + b.values().size(), out.data() + a.values().size());
    return FeatureMap(std::move(out));
}

inline FeatureMap depth_as_feature(const DepthMap& depth) {
    Volume<double> out(1, depth.height(), depth.width());
    std::copy(depth.values().data(), depth.values().data() + depth.values().size(), out.data());
    return FeatureMap(std::move(out));
}

inline FeatureMap degradation_as_feature(const DegradationMap& deg) {
    Volume<double> out(1, deg.height(), deg.width());
    std::copy(deg.values().data(), deg.values().data() + deg.values().size(), out.data());
    return FeatureMap(std::move(out));
}

}  // namespace depthbin
