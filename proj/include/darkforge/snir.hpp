#pragma once

#include <stdexcept>

#include "darkforge/ops.hpp"

namespace darkforge {

/// Scaled nearest-neighbor upsampling gated by a learned per-pixel sigmoid.
/// The 1x1 conv must map C1 -> C1 so the Hadamard product is well-formed.
struct SnirParams {
    Tensor weight;             // (C, C, 1, 1)
    std::vector<double> bias;  // (C)
    int scale = 2;
    double alpha = 0.25;       // defaults to 1/scale^2

    static SnirParams make(int channels, int s) {
        SnirParams p;
        p.weight = Tensor(channels, channels, 1, 1);
        p.bias.assign(channels, 0.0);
        p.scale = s;
        p.alpha = 1.0 / double(s * s);
        return p;
    }
};

inline void check_snir_params(const Tensor& x, const SnirParams& p) {
    if (p.weight.h != 1 || p.weight.w != 1)
        throw std::invalid_argument("snir: weight must be 1x1");
    if (p.weight.n != p.weight.c || p.weight.c != x.c)
        throw std::invalid_argument("snir: gate channels must match input channels");
    if (p.scale < 1) throw std::invalid_argument("snir: scale < 1");
    if (p.alpha <= 0.0) throw std::invalid_argument("snir: alpha must be positive");
}

struct SnirCache {
    Tensor u;  // alpha * upsample(x)
    Tensor z;  // conv1x1(u) + b
};

inline Tensor snir_forward(const Tensor& x, const SnirParams& p, SnirCache* cache = nullptr) {
    check_snir_params(x, p);
    SnirCache local;
    SnirCache& c = cache ? *cache : local;
    c.u = scale(nearest_upsample(x, p.scale), p.alpha);
    Conv2dParams conv{p.weight, p.bias, 1, 0, 1};
    c.z = conv2d_forward(c.u, conv);
    return hadamard(c.u, sigmoid(c.z));
}

struct SnirGrads {
    Tensor grad_x;
    Tensor grad_weight;
    std::vector<double> grad_bias;
};

inline SnirGrads snir_backward(const Tensor& x, const SnirParams& p, const SnirCache& c,
                               const Tensor& grad_out) {
    if (!c.u.same_shape(grad_out))
        throw std::invalid_argument("snir_backward: grad_out shape mismatch");
    Tensor gate = sigmoid(c.z);

    // Y = u * gate: u contributes directly and through the gate's conv input.
    Tensor grad_u = hadamard(grad_out, gate);
    Tensor grad_z = sigmoid_backward(c.z, hadamard(grad_out, c.u));

    Conv2dParams conv{p.weight, p.bias, 1, 0, 1};
    ConvGrads cg = conv2d_backward(c.u, conv, grad_z);
    for (std::size_t k = 0; k < grad_u.size(); ++k) grad_u.data[k] += cg.grad_x.data[k];

    SnirGrads g;
    g.grad_x = scale(nearest_upsample_backward(x, p.scale, grad_u), p.alpha);
    g.grad_weight = std::move(cg.grad_weight);
    g.grad_bias = std::move(cg.grad_bias);
    return g;
}

/// SNI-style baseline: scaled nearest upsampling only, no learned gate.
inline Tensor sni_baseline_forward(const Tensor& x, int s) {
    if (s < 1) throw std::invalid_argument("sni_baseline: scale < 1");
    return scale(nearest_upsample(x, s), 1.0 / double(s * s));
}

}  // namespace darkforge
