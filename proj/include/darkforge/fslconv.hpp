#pragma once

#include <stdexcept>

#include "darkforge/ops.hpp"

namespace darkforge {

enum class OuterAct { Identity, Relu, Silu };

inline Tensor apply_outer_act(const Tensor& z, OuterAct act) {
    switch (act) {
        case OuterAct::Identity:
            return z;
        case OuterAct::Relu: {
            Tensor y = z;
            for (double& v : y.data) v = v > 0.0 ? v : 0.0;
            return y;
        }
        case OuterAct::Silu:
            return silu_gate(z);
    }
    throw std::logic_error("apply_outer_act: bad enum");
}

inline Tensor outer_act_backward(const Tensor& z, OuterAct act, const Tensor& grad_out) {
    switch (act) {
        case OuterAct::Identity:
            return grad_out;
        case OuterAct::Relu: {
            Tensor g = grad_out;
            for (std::size_t k = 0; k < g.size(); ++k)
                if (z.data[k] <= 0.0) g.data[k] = 0.0;
            return g;
        }
        case OuterAct::Silu:
            return silu_gate_backward(z, grad_out);
    }
    throw std::logic_error("outer_act_backward: bad enum");
}

/// Two serial half-width 3x3 stages; outputs concatenated along channels.
/// Stage 1 carries the block's stride; stage 2 preserves spatial dims.
struct FslConvParams {
    Conv2dParams stage1;  // weight (C0, C1, 3, 3), padding 1
    BatchNormParams bn1;
    Conv2dParams stage2;  // weight (C0, C0, 3, 3), stride 1, padding 1
    BatchNormParams bn2;
    OuterAct outer_act = OuterAct::Identity;

    int c0() const { return stage1.weight.n; }
    int c_out() const { return 2 * c0(); }
};

inline void check_fsl_params(const FslConvParams& p) {
    const int c0 = p.stage1.weight.n;
    if (p.stage2.weight.n != c0 || p.stage2.weight.c != c0)
        throw std::invalid_argument("fslconv: stage2 must map C0 -> C0");
    if (p.stage2.stride != 1)
        throw std::invalid_argument("fslconv: stage2 stride must be 1");
}

struct FslConvCache {
    Tensor z1, a1, g1;  // conv1 out, BN1-silu out, after outer act
    Tensor z2, a2, g2;
    BatchNormCache bn1, bn2;
};

inline Tensor fslconv_forward(const Tensor& x, const FslConvParams& p,
                              FslConvCache* cache = nullptr) {
    check_fsl_params(p);
    FslConvCache local;
    FslConvCache& c = cache ? *cache : local;
    c.z1 = conv2d_forward(x, p.stage1);
    Tensor b1 = batchnorm_forward(c.z1, p.bn1, &c.bn1);
    c.a1 = silu_gate(b1);
    c.g1 = apply_outer_act(c.a1, p.outer_act);
    c.z2 = conv2d_forward(c.g1, p.stage2);
    Tensor b2 = batchnorm_forward(c.z2, p.bn2, &c.bn2);
    c.a2 = silu_gate(b2);
    c.g2 = apply_outer_act(c.a2, p.outer_act);
    return concat_channels(c.g1, c.g2);
}

struct FslConvGrads {
    Tensor grad_x;
    ConvGrads stage1;
    BatchNormGrads bn1;
    ConvGrads stage2;
    BatchNormGrads bn2;
};

inline FslConvGrads fslconv_backward(const Tensor& x, const FslConvParams& p,
                                     const FslConvCache& c, const Tensor& grad_out) {
    const int c0 = p.c0();
    if (grad_out.c != 2 * c0)
        throw std::invalid_argument("fslconv_backward: grad_out channel mismatch");
    FslConvGrads g;

    Tensor gG1 = slice_channels(grad_out, 0, c0);
    Tensor gG2 = slice_channels(grad_out, c0, 2 * c0);

    // Stage 2 chain.
    Tensor b2 = batchnorm_forward(c.z2, p.bn2);
    Tensor gA2 = outer_act_backward(c.a2, p.outer_act, gG2);
    Tensor gB2 = silu_gate_backward(b2, gA2);
    g.bn2 = batchnorm_backward(c.z2, p.bn2, c.bn2, gB2);
    g.stage2 = conv2d_backward(c.g1, p.stage2, g.bn2.grad_x);

    // G1 receives gradient both from the concat slice and through stage 2.
    for (std::size_t k = 0; k < gG1.size(); ++k) gG1.data[k] += g.stage2.grad_x.data[k];

    Tensor b1 = batchnorm_forward(c.z1, p.bn1);
    Tensor gA1 = outer_act_backward(c.a1, p.outer_act, gG1);
    Tensor gB1 = silu_gate_backward(b1, gA1);
    g.bn1 = batchnorm_backward(c.z1, p.bn1, c.bn1, gB1);
    g.stage1 = conv2d_backward(x, p.stage1, g.bn1.grad_x);
    g.grad_x = g.stage1.grad_x;
    return g;
}

/// Weight-parameter count of the two stages (bias/BN excluded).
inline long long fslconv_weight_count(int c1, int c2) {
    if (c2 % 2 != 0) throw std::invalid_argument("fslconv: C2 must be even");
    const long long c0 = c2 / 2;
    return c0 * c1 * 9 + c0 * c0 * 9;
}

}  // namespace darkforge
