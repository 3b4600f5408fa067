#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "darkforge/tensor.hpp"

namespace darkforge {

struct Conv2dParams {
    Tensor weight;               // (C_out, C_in/groups, Kh, Kw)
    std::vector<double> bias;    // empty = no bias
    int stride = 1;
    int padding = 0;
    int groups = 1;
};

/// Multiply/add tally for the naive convolution loop nest.
struct OpCount {
    unsigned long long mul = 0;
    unsigned long long add = 0;
    unsigned long long total() const { return mul + add; }
};

inline void check_conv_shapes(const Tensor& x, const Conv2dParams& p) {
    if (p.groups < 1 || x.c % p.groups != 0 || p.weight.n % p.groups != 0)
        throw std::invalid_argument("conv2d: groups must divide channel counts");
    if (p.weight.c != x.c / p.groups)
        throw std::invalid_argument("conv2d: input channel mismatch");
    if (p.stride < 1 || p.weight.h < 1 || p.weight.w < 1)
        throw std::invalid_argument("conv2d: bad kernel/stride");
    if (!p.bias.empty() && static_cast<int>(p.bias.size()) != p.weight.n)
        throw std::invalid_argument("conv2d: bias length mismatch");
}

inline int conv_out_dim(int in, int k, int pad, int stride) {
    return (in + 2 * pad - k) / stride + 1;
}

/// Direct cross-correlation (no kernel flip), zero padding.
/// Fixed loop nest; results are bit-reproducible.
inline Tensor conv2d_forward(const Tensor& x, const Conv2dParams& p, OpCount* count = nullptr) {
    check_conv_shapes(x, p);
    const int co = p.weight.n, kh = p.weight.h, kw = p.weight.w;
    const int cig = p.weight.c, cog = co / p.groups;
    const int ho = conv_out_dim(x.h, kh, p.padding, p.stride);
    const int wo = conv_out_dim(x.w, kw, p.padding, p.stride);
    if (ho < 1 || wo < 1) throw std::invalid_argument("conv2d: empty output");

    Tensor y(x.n, co, ho, wo);
    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < co; ++oc) {
            const int g = oc / cog;
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    double acc = 0.0;
                    for (int ic = 0; ic < cig; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oh * p.stride + ky - p.padding;
                                const int ix = ow * p.stride + kx - p.padding;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                acc += x.at(in, g * cig + ic, iy, ix) * p.weight.at(oc, ic, ky, kx);
                                if (count) {
                                    ++count->mul;
                                    ++count->add;
                                }
                            }
                    if (count) --count->add;  // n products need n-1 accumulation adds
                    if (!p.bias.empty()) {
                        acc += p.bias[oc];
                        if (count) ++count->add;
                    }
                    y.at(in, oc, oh, ow) = acc;
                }
        }
    return y;
}

struct ConvGrads {
    Tensor grad_x;
    Tensor grad_weight;
    std::vector<double> grad_bias;
};

inline ConvGrads conv2d_backward(const Tensor& x, const Conv2dParams& p, const Tensor& grad_out) {
    check_conv_shapes(x, p);
    const int co = p.weight.n, kh = p.weight.h, kw = p.weight.w;
    const int cig = p.weight.c, cog = co / p.groups;
    const int ho = conv_out_dim(x.h, kh, p.padding, p.stride);
    const int wo = conv_out_dim(x.w, kw, p.padding, p.stride);
    if (grad_out.n != x.n || grad_out.c != co || grad_out.h != ho || grad_out.w != wo)
        throw std::invalid_argument("conv2d_backward: grad_out shape mismatch");

    ConvGrads g;
    g.grad_x = Tensor(x.n, x.c, x.h, x.w);
    g.grad_weight = Tensor(co, cig, kh, kw);
    g.grad_bias.assign(p.bias.empty() ? 0 : co, 0.0);

    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < co; ++oc) {
            const int grp = oc / cog;
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    const double go = grad_out.at(in, oc, oh, ow);
                    if (!p.bias.empty()) g.grad_bias[oc] += go;
                    for (int ic = 0; ic < cig; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oh * p.stride + ky - p.padding;
                                const int ix = ow * p.stride + kx - p.padding;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                g.grad_x.at(in, grp * cig + ic, iy, ix) +=
                                    go * p.weight.at(oc, ic, ky, kx);
                                g.grad_weight.at(oc, ic, ky, kx) +=
                                    go * x.at(in, grp * cig + ic, iy, ix);
                            }
                }
        }
    return g;
}

enum class BnMode { BatchStats, ProvidedStats };

struct BatchNormParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    double eps = 1e-8;
    BnMode mode = BnMode::BatchStats;
    std::vector<double> running_mean;  // used in ProvidedStats mode
    std::vector<double> running_var;
};

struct BatchNormCache {
    std::vector<double> mean;
    std::vector<double> var;  // population variance over batch and spatial dims
};

inline Tensor batchnorm_forward(const Tensor& x, const BatchNormParams& p,
                                BatchNormCache* cache = nullptr) {
    if (static_cast<int>(p.gamma.size()) != x.c || static_cast<int>(p.beta.size()) != x.c)
        throw std::invalid_argument("batchnorm: gamma/beta length mismatch");
    std::vector<double> mean(x.c, 0.0), var(x.c, 0.0);
    const std::size_t per = static_cast<std::size_t>(x.n) * x.h * x.w;
    if (p.mode == BnMode::BatchStats) {
        for (int c = 0; c < x.c; ++c) {
            double s = 0.0;
            for (int in = 0; in < x.n; ++in)
                for (int ih = 0; ih < x.h; ++ih)
                    for (int iw = 0; iw < x.w; ++iw) s += x.at(in, c, ih, iw);
            mean[c] = s / double(per);
            double sq = 0.0;
            for (int in = 0; in < x.n; ++in)
                for (int ih = 0; ih < x.h; ++ih)
                    for (int iw = 0; iw < x.w; ++iw) {
                        const double d = x.at(in, c, ih, iw) - mean[c];
                        sq += d * d;
                    }
            var[c] = sq / double(per);
        }
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }
    Tensor y(x.n, x.c, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c) {
            const double inv = 1.0 / std::sqrt(var[c] + p.eps);
            for (int ih = 0; ih < x.h; ++ih)
                for (int iw = 0; iw < x.w; ++iw)
                    y.at(in, c, ih, iw) =
                        (x.at(in, c, ih, iw) - mean[c]) * inv * p.gamma[c] + p.beta[c];
        }
    if (cache) {
        cache->mean = std::move(mean);
        cache->var = std::move(var);
    }
    return y;
}

struct BatchNormGrads {
    Tensor grad_x;
    std::vector<double> grad_gamma;
    std::vector<double> grad_beta;
};

inline BatchNormGrads batchnorm_backward(const Tensor& x, const BatchNormParams& p,
                                         const BatchNormCache& cache, const Tensor& grad_out) {
    if (!x.same_shape(grad_out))
        throw std::invalid_argument("batchnorm_backward: shape mismatch");
    BatchNormGrads g;
    g.grad_x = Tensor(x.n, x.c, x.h, x.w);
    g.grad_gamma.assign(x.c, 0.0);
    g.grad_beta.assign(x.c, 0.0);
    const double m = static_cast<double>(static_cast<std::size_t>(x.n) * x.h * x.w);
    for (int c = 0; c < x.c; ++c) {
        const double inv = 1.0 / std::sqrt(cache.var[c] + p.eps);
        double sum_g = 0.0, sum_gx = 0.0;
        for (int in = 0; in < x.n; ++in)
            for (int ih = 0; ih < x.h; ++ih)
                for (int iw = 0; iw < x.w; ++iw) {
                    const double xhat = (x.at(in, c, ih, iw) - cache.mean[c]) * inv;
                    const double go = grad_out.at(in, c, ih, iw);
                    sum_g += go;
                    sum_gx += go * xhat;
                }
        g.grad_gamma[c] = sum_gx;
        g.grad_beta[c] = sum_g;
        for (int in = 0; in < x.n; ++in)
            for (int ih = 0; ih < x.h; ++ih)
                for (int iw = 0; iw < x.w; ++iw) {
                    const double xhat = (x.at(in, c, ih, iw) - cache.mean[c]) * inv;
                    const double go = grad_out.at(in, c, ih, iw);
                    if (p.mode == BnMode::BatchStats) {
                        g.grad_x.at(in, c, ih, iw) =
                            p.gamma[c] * inv * (go - sum_g / m - xhat * sum_gx / m);
                    } else {
                        g.grad_x.at(in, c, ih, iw) = p.gamma[c] * inv * go;
                    }
                }
    }
    return g;
}

inline double sigmoid_scalar(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Tensor sigmoid(const Tensor& z) {
    Tensor y = z;
    for (double& v : y.data) v = sigmoid_scalar(v);
    return y;
}

inline Tensor sigmoid_backward(const Tensor& z, const Tensor& grad_out) {
    if (!z.same_shape(grad_out)) throw std::invalid_argument("sigmoid_backward: shape mismatch");
    Tensor g(z.n, z.c, z.h, z.w);
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double s = sigmoid_scalar(z.data[k]);
        g.data[k] = grad_out.data[k] * s * (1.0 - s);
    }
    return g;
}

/// z * sigmoid(z), the gating fraction z / (1 + e^{-z}).
inline Tensor silu_gate(const Tensor& z) {
    Tensor y = z;
    for (double& v : y.data) v = v * sigmoid_scalar(v);
    return y;
}

inline Tensor silu_gate_backward(const Tensor& z, const Tensor& grad_out) {
    if (!z.same_shape(grad_out)) throw std::invalid_argument("silu_backward: shape mismatch");
    Tensor g(z.n, z.c, z.h, z.w);
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double s = sigmoid_scalar(z.data[k]);
        g.data[k] = grad_out.data[k] * (s + z.data[k] * s * (1.0 - s));
    }
    return g;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
    Tensor y = a;
    for (std::size_t k = 0; k < y.size(); ++k) y.data[k] *= b.data[k];
    return y;
}

/// Channel concatenation, a's channels first.
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels: N/H/W mismatch");
    Tensor y(a.n, a.c + b.c, a.h, a.w);
    for (int in = 0; in < a.n; ++in) {
        for (int c = 0; c < a.c; ++c)
            for (int ih = 0; ih < a.h; ++ih)
                for (int iw = 0; iw < a.w; ++iw) y.at(in, c, ih, iw) = a.at(in, c, ih, iw);
        for (int c = 0; c < b.c; ++c)
            for (int ih = 0; ih < a.h; ++ih)
                for (int iw = 0; iw < a.w; ++iw) y.at(in, a.c + c, ih, iw) = b.at(in, c, ih, iw);
    }
    return y;
}

inline Tensor slice_channels(const Tensor& x, int c0, int c1) {
    if (c0 < 0 || c1 > x.c || c0 >= c1) throw std::invalid_argument("slice_channels: bad range");
    Tensor y(x.n, c1 - c0, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int c = c0; c < c1; ++c)
            for (int ih = 0; ih < x.h; ++ih)
                for (int iw = 0; iw < x.w; ++iw) y.at(in, c - c0, ih, iw) = x.at(in, c, ih, iw);
    return y;
}

/// Each input pixel replicated into an s x s block.
inline Tensor nearest_upsample(const Tensor& x, int s) {
    if (s < 1) throw std::invalid_argument("nearest_upsample: scale < 1");
    Tensor y(x.n, x.c, x.h * s, x.w * s);
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c)
            for (int ih = 0; ih < y.h; ++ih)
                for (int iw = 0; iw < y.w; ++iw)
                    y.at(in, c, ih, iw) = x.at(in, c, ih / s, iw / s);
    return y;
}

/// Adjoint of nearest_upsample: sum over each s x s block.
inline Tensor nearest_upsample_backward(const Tensor& x, int s, const Tensor& grad_out) {
    if (grad_out.n != x.n || grad_out.c != x.c || grad_out.h != x.h * s || grad_out.w != x.w * s)
        throw std::invalid_argument("nearest_upsample_backward: shape mismatch");
    Tensor g(x.n, x.c, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c)
            for (int ih = 0; ih < grad_out.h; ++ih)
                for (int iw = 0; iw < grad_out.w; ++iw)
                    g.at(in, c, ih / s, iw / s) += grad_out.at(in, c, ih, iw);
    return g;
}

inline Tensor average_pool(const Tensor& x, int s) {
    if (s < 1 || x.h % s != 0 || x.w % s != 0)
        throw std::invalid_argument("average_pool: dims not divisible by window");
    Tensor y(x.n, x.c, x.h / s, x.w / s);
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c)
            for (int oh = 0; oh < y.h; ++oh)
                for (int ow = 0; ow < y.w; ++ow) {
                    double acc = 0.0;
                    for (int ky = 0; ky < s; ++ky)
                        for (int kx = 0; kx < s; ++kx)
                            acc += x.at(in, c, oh * s + ky, ow * s + kx);
                    y.at(in, c, oh, ow) = acc / double(s * s);
                }
    return y;
}

inline Tensor scale(const Tensor& x, double a) {
    Tensor y = x;
    for (double& v : y.data) v *= a;
    return y;
}

}  // namespace darkforge
