#pragma once

// Test-only reference implementations, kept deliberately naive and
// independent of the library's computation paths: direct 6-loop
// convolution, per-pixel double-loop variance, all-pairs Chamfer distance,
// and a standalone bilinear sampler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "depthbin/conv.hpp"
#include "depthbin/rng.hpp"
#include "depthbin/types.hpp"

namespace depthbin::testing {

// Direct convolution with "same" zero padding; no loop-order tricks shared
// with the implementation.
inline Volume<double> naive_conv(const Volume<double>& in, const Conv2d& conv) {
    const int h = in.height();
    const int w = in.width();
    Volume<double> out(conv.out_channels, h, w, 0.0);
    for (int co = 0; co < conv.out_channels; ++co) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = conv.bias[co];
                for (int ci = 0; ci < conv.in_channels; ++ci) {
                    for (int ky = 0; ky < conv.kh; ++ky) {
                        for (int kx = 0; kx < conv.kw; ++kx) {
                            const int sy = y + ky - conv.kh / 2;
                            const int sx = x + kx - conv.kw / 2;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += conv.weight(co, ci, ky, kx) * in.at(ci, sy, sx);
                        }
                    }
                }
                out.at(co, y, x) = acc;
            }
        }
    }
    return out;
}

// Population variance over the truncated k x k window, straight from the
// defining two-pass formula.
inline void brute_local_stats(const Grid<double>& deg, int k, int y, int x, double* mean_out,
                              double* var_out) {
    const int r = k / 2;
    double sum = 0.0;
    int count = 0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if (yy < 0 || yy >= deg.height() || xx < 0 || xx >= deg.width()) continue;
            sum += deg.at(yy, xx);
            ++count;
        }
    }
    const double mu = sum / count;
    double sq = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if (yy < 0 || yy >= deg.height() || xx < 0 || xx >= deg.width()) continue;
            const double d = deg.at(yy, xx) - mu;
            sq += d * d;
        }
    }
    *mean_out = mu;
    *var_out = sq / count;
}

// All-pairs bi-directional Chamfer distance.
inline double brute_chamfer(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    for (double z : b) {
        double best = std::numeric_limits<double>::infinity();
        for (double c : a) best = std::min(best, (c - z) * (c - z));
        total += best;
    }
    for (double c : a) {
        double best = std::numeric_limits<double>::infinity();
        for (double z : b) best = std::min(best, (c - z) * (c - z));
        total += best;
    }
    return total;
}

// Bilinear interpolation written from the four-corner formula.
inline double bilinear_ref(const Volume<double>& planes, int c, double y, double x) {
    const double fy = std::floor(y);
    const double fx = std::floor(x);
    const int y0 = static_cast<int>(fy);
    const int x0 = static_cast<int>(fx);
    const double wy = y - fy;
    const double wx = x - fx;
    double acc = 0.0;
    const double corner_w[4] = {(1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx};
    const int corner_y[4] = {y0, y0, y0 + 1, y0 + 1};
    const int corner_x[4] = {x0, x0 + 1, x0, x0 + 1};
    for (int i = 0; i < 4; ++i) {
        if (corner_y[i] < 0 || corner_y[i] >= planes.height() || corner_x[i] < 0 ||
            corner_x[i] >= planes.width())
            continue;
        acc += corner_w[i] * planes.at(c, corner_y[i], corner_x[i]);
    }
    return acc;
}

// Deterministic random test data.
inline Grid<double> random_grid(Rng& rng, int h, int w, double lo, double hi) {
    Grid<double> g(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.next_uniform(lo, hi);
    return g;
}

inline Volume<double> random_volume(Rng& rng, int c, int h, int w, double lo, double hi) {
    Volume<double> v(c, h, w);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.next_uniform(lo, hi);
    return v;
}

inline double max_abs_diff(const Volume<double>& a, const Volume<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace depthbin::testing
