#pragma once

// Probability optimization over the bin candidates: candidate projection,
// hidden-state initialization, degradation-modulated deformable update,
// a convolutional GRU step, and the softmax probability head.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "depthbin/conv.hpp"
#include "depthbin/rng.hpp"
#include "depthbin/types.hpp"

namespace depthbin {

/// Learnable parameters of one probability-head instance.
///
/// The deformable update uses a single K x K kernel shared across hidden
/// channels; per-tap offsets (2 channels each) and sigmoid modulation
/// scalars (1 channel each) are convolved out of the degradation map.
struct ProbHeadWeights {
    std::vector<Conv2d> proj_convs;  // four 3x3 candidate-projection layers
    Conv2d hidden_conv;              // 3x3, context -> hidden (tanh follows)
    Conv2d offset_conv;              // 3x3, degradation -> 2*K*K offsets
    Conv2d modulation_conv;          // 3x3, degradation -> K*K modulation logits
    std::vector<double> deform_kernel;  // K*K taps, row-major
    double deform_bias = 0.0;
    int deform_k = 3;
    Conv2d gru_update;     // 3x3, [q; h] -> hidden
    Conv2d gru_reset;      // 3x3, [q; h] -> hidden
    Conv2d gru_candidate;  // 3x3, [q; r*h] -> hidden
    Conv2d head_conv;      // 1x1, hidden -> n_bins logits

    int n_bins() const { return head_conv.out_channels; }
    int hidden_channels() const { return head_conv.in_channels; }
    int candidate_channels() const { return proj_convs.empty() ? 0 : proj_convs.front().in_channels; }
    int context_channels() const { return hidden_conv.in_channels; }
    int q_channels() const { return gru_update.in_channels - hidden_channels(); }
};

inline ValidationResult check_prob_head_weights(const ProbHeadWeights& w) {
    const auto finite = [](const Conv2d& c) {
        for (double v : c.weights)
            if (!std::isfinite(v)) return false;
        for (double v : c.bias)
            if (!std::isfinite(v)) return false;
        return true;
    };
    if (w.proj_convs.size() != 4)
        return ValidationResult::fail(ValidationError::bad_hyper_params, "expected four projection convs");
    for (const Conv2d& c : w.proj_convs)
        if (!finite(c)) return ValidationResult::fail(ValidationError::non_finite_value, "projection conv");
    for (const Conv2d* c : {&w.hidden_conv, &w.offset_conv, &w.modulation_conv, &w.gru_update,
                            &w.gru_reset, &w.gru_candidate, &w.head_conv})
        if (!finite(*c)) return ValidationResult::fail(ValidationError::non_finite_value, "conv weights");
    for (double v : w.deform_kernel)
        if (!std::isfinite(v)) return ValidationResult::fail(ValidationError::non_finite_value, "deform kernel");
    if (!std::isfinite(w.deform_bias))
        return ValidationResult::fail(ValidationError::non_finite_value, "deform bias");
    const int k = w.deform_k;
    if (k < 1 || k % 2 == 0 || w.deform_kernel.size() != static_cast<std::size_t>(k) * k)
        return ValidationResult::fail(ValidationError::bad_hyper_params, "deform kernel size");
    const int hidden = w.hidden_channels();
    if (w.offset_conv.out_channels != 2 * k * k || w.modulation_conv.out_channels != k * k)
        return ValidationResult::fail(ValidationError::bad_hyper_params, "offset/modulation channel counts");
    for (const Conv2d* c : {&w.gru_update, &w.gru_reset, &w.gru_candidate})
        if (c->out_channels != hidden)
            return ValidationResult::fail(ValidationError::bad_hyper_params, "GRU output channels");
    if (w.hidden_conv.out_channels != hidden || w.proj_convs.back().out_channels > w.q_channels())
        return ValidationResult::fail(ValidationError::bad_hyper_params, "hidden channel bookkeeping");
    return ValidationResult::pass();
}

/// Deterministic weight initialization: uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)].
/// `extra_q_channels` counts the context/layer channels concatenated onto the
/// projected candidates to form the GRU input Q.
inline ProbHeadWeights make_prob_head_weights(int n_bins, int context_channels, int extra_q_channels,
                                              int hidden_channels, std::uint64_t seed, int deform_k = 3) {
    if (n_bins < 1 || context_channels < 1 || extra_q_channels < 0 || hidden_channels < 1 ||
        deform_k < 1 || deform_k % 2 == 0)
        throw ValidationFailure(ValidationError::bad_hyper_params, "prob head channel configuration");
    Rng rng(seed);
    ProbHeadWeights w;
    w.proj_convs.push_back(make_seeded_conv(hidden_channels, n_bins, 3, 3, rng));
    for (int i = 1; i < 4; ++i) w.proj_convs.push_back(make_seeded_conv(hidden_channels, hidden_channels, 3, 3, rng));
    w.hidden_conv = make_seeded_conv(hidden_channels, context_channels, 3, 3, rng);
    w.deform_k = deform_k;
    w.offset_conv = make_seeded_conv(2 * deform_k * deform_k, 1, 3, 3, rng);
    w.modulation_conv = make_seeded_conv(deform_k * deform_k, 1, 3, 3, rng);
    w.deform_kernel.resize(static_cast<std::size_t>(deform_k) * deform_k);
    {
        const double s = 1.0 / deform_k;
        for (double& v : w.deform_kernel) v = rng.next_uniform(-s, s);
        w.deform_bias = 0.0;
    }
    const int q_channels = hidden_channels + extra_q_channels;
    w.gru_update = make_seeded_conv(hidden_channels, q_channels + hidden_channels, 3, 3, rng);
    w.gru_reset = make_seeded_conv(hidden_channels, q_channels + hidden_channels, 3, 3, rng);
    w.gru_candidate = make_seeded_conv(hidden_channels, q_channels + hidden_channels, 3, 3, rng);
    w.head_conv = make_seeded_conv(n_bins, hidden_channels, 1, 1, rng);
    require_valid(check_prob_head_weights(w));
    return w;
}

/// Four 3x3 conv + ReLU layers over the N-channel candidate grid.
inline FeatureMap project_candidates(const CandidateVolume& centers, const ProbHeadWeights& w) {
    FeatureMap feat{Volume<double>(centers.centers())};
    for (const Conv2d& conv : w.proj_convs) feat = relu(apply_conv(conv, feat));
    return feat;
}

/// Channel-wise concatenation forming the GRU input Q = [projected; context].
inline FeatureMap build_gru_input(const FeatureMap& projected, const FeatureMap& context) {
    return concat_channels(projected, context);
}

/// Initial hidden state H' = tanh(conv(feat)); outputs lie in (-1, 1).
inline FeatureMap init_hidden(const FeatureMap& feat, const ProbHeadWeights& w) {
    return tanh_map(apply_conv(w.hidden_conv, feat));
}

/// Bilinear sample of one plane at (y, x); coordinates outside the image
/// read as 0.
inline double bilinear_sample(const Volume<double>& planes, int c, double y, double x) {
    const int h = planes.height();
    const int w = planes.width();
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0;
    const double fx = x - x0;
    const auto tap = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return planes.at(c, yy, xx);
    };
    const double top = (1.0 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1);
    const double bot = (1.0 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1);
    return (1.0 - fy) * top + fy * bot;
}

/// Degradation-modulated deformable update: per output location each of the
/// K x K taps samples the hidden state at its offset position (bilinear,
/// zero outside), scales by its sigmoid modulation and kernel weight, and
/// sums. Returns H + J(H, D).
inline FeatureMap deform_modulate(const FeatureMap& hidden, const DegradationMap& deg,
                                  const ProbHeadWeights& w) {
    if (hidden.height() != deg.height() || hidden.width() != deg.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "hidden and degradation shapes differ");
    const int k = w.deform_k;
    const int r = k / 2;
    const FeatureMap deg_feat = degradation_as_feature(deg);
    const FeatureMap offsets = apply_conv(w.offset_conv, deg_feat);      // 2*K*K channels: (dy, dx) per tap
    const FeatureMap mod_logits = apply_conv(w.modulation_conv, deg_feat);  // K*K channels

    const int h = hidden.height();
    const int wd = hidden.width();
    const int taps = k * k;
    Volume<double> out = hidden.values();  // start from H, accumulate J
    std::vector<double> tap_w(taps), tap_y(taps), tap_x(taps);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) {
            for (int t = 0; t < taps; ++t) {
                tap_w[t] = w.deform_kernel[t] * sigmoid(mod_logits.at(t, y, x));
                tap_y[t] = y + (t / k - r) + offsets.at(2 * t, y, x);
                tap_x[t] = x + (t % k - r) + offsets.at(2 * t + 1, y, x);
            }
            for (int c = 0; c < hidden.channels(); ++c) {
                double acc = w.deform_bias;
                for (int t = 0; t < taps; ++t)
                    acc += tap_w[t] * bilinear_sample(hidden.values(), c, tap_y[t], tap_x[t]);
                out.at(c, y, x) += acc;
            }
        }
    }
    return FeatureMap(std::move(out));
}

/// One convolutional GRU transition:
///   z = sigmoid(conv_z([q; h]))        update gate
///   r = sigmoid(conv_r([q; h]))        reset gate
///   h~ = tanh(conv_h([q; r*h]))        candidate state
///   h' = (1 - z)*h + z*h~
inline FeatureMap conv_gru_step(const FeatureMap& q, const FeatureMap& hidden, const ProbHeadWeights& w) {
    if (q.height() != hidden.height() || q.width() != hidden.width())
        throw ValidationFailure(ValidationError::shape_mismatch, "q and hidden spatial shapes differ");
    const FeatureMap qh = concat_channels(q, hidden);
    Volume<double> z = apply_conv(w.gru_update, qh).values();
    Volume<double> r = apply_conv(w.gru_reset, qh).values();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i]);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]);

    Volume<double> gated = hidden.values();
    for (std::size_t i = 0; i < gated.size(); ++i) gated[i] *= r[i];
    const FeatureMap cand =
        tanh_map(apply_conv(w.gru_candidate, concat_channels(q, FeatureMap(std::move(gated)))));

    Volume<double> out = hidden.values();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - z[i]) * out[i] + z[i] * cand.values()[i];
    return FeatureMap(std::move(out));
}

/// Numerically stable per-pixel softmax over the bin (channel) axis.
inline ProbabilityVolume softmax_bins(const FeatureMap& logits) {
    const int n = logits.channels();
    if (n < 1) throw ValidationFailure(ValidationError::bad_bin_count, "softmax over zero channels");
    Volume<double> probs(n, logits.height(), logits.width());
    for (int y = 0; y < logits.height(); ++y) {
        for (int x = 0; x < logits.width(); ++x) {
            double mx = logits.at(0, y, x);
            for (int c = 1; c < n; ++c) mx = std::max(mx, logits.at(c, y, x));
            double sum = 0.0;
            for (int c = 0; c < n; ++c) {
                const double e = std::exp(logits.at(c, y, x) - mx);
                probs.at(c, y, x) = e;
                sum += e;
            }
            for (int c = 0; c < n; ++c) probs.at(c, y, x) /= sum;
        }
    }
    return ProbabilityVolume(std::move(probs));
}

/// Probability head: 1x1 conv to N logits, softmax over bins, then ReLU.
/// Softmax outputs are strictly positive, so the trailing ReLU is the
/// identity and per-pixel normalization is preserved.
inline ProbabilityVolume probability_head(const FeatureMap& hidden, const ProbHeadWeights& w) {
    const ProbabilityVolume soft = softmax_bins(apply_conv(w.head_conv, hidden));
    Volume<double> out = soft.probs();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return ProbabilityVolume(std::move(out));
}

}  // namespace depthbin
