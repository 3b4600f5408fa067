#pragma once

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "darkforge/image.hpp"
#include "darkforge/ops.hpp"
#include "darkforge/stats.hpp"

namespace darkforge {

struct LapmConfig {
    double lambda = 8.0;      // pupil dilation amplification, typical [5, 12]
    double tau_photon = 0.02; // luminance threshold on unit-interval scale
    double eps = 1e-8;
    int levels = 5;
};

/// The four trainable scalars: 1x1 kernel, its bias, and the BN-style
/// scale/shift of the gated normalization.
struct LapmParams {
    double w = 1.0;
    double bias = 0.0;
    double gamma = 1.0;
    double beta = 0.0;

    static constexpr int kTrainableCount = 4;
};

/// Elementwise amplification; values intentionally not clipped.
inline RgbImageF amplify(const RgbImageF& img, double lambda) {
    if (lambda < 5.0 || lambda > 12.0)
        std::cerr << "warning: amplification factor " << lambda
                  << " outside the typical [5, 12] range\n";
    RgbImageF out = img;
    for (double& v : out.data) v *= lambda;
    return out;
}

/// 1 where gray strictly exceeds tau.
inline Plane photomask(const Plane& gray, double tau) {
    Plane out(gray.width, gray.height);
    for (std::size_t k = 0; k < gray.data.size(); ++k)
        out.data[k] = gray.data[k] > tau ? 1.0 : 0.0;
    return out;
}

/// 2x2 stride-2 max; a trailing odd row/column is dropped.
inline Plane max_downsample2(const Plane& p) {
    Plane out(p.width / 2, p.height / 2);
    for (int i = 0; i < out.height; ++i)
        for (int j = 0; j < out.width; ++j)
            out.at(i, j) = std::max(std::max(p.at(2 * i, 2 * j), p.at(2 * i, 2 * j + 1)),
                                    std::max(p.at(2 * i + 1, 2 * j), p.at(2 * i + 1, 2 * j + 1)));
    return out;
}

/// Gated normalization: (gamma * z + beta) / (1 + e^{-z} + eps), z = w*m + bias.
inline Plane texture_features(const Plane& mask, const LapmParams& p, double eps = 1e-8) {
    Plane out(mask.width, mask.height);
    for (std::size_t k = 0; k < mask.data.size(); ++k) {
        const double z = p.w * mask.data[k] + p.bias;
        out.data[k] = (p.gamma * z + p.beta) / (1.0 + std::exp(-z) + eps);
    }
    return out;
}

struct LapmGrads {
    double w = 0.0;
    double bias = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
};

/// Gradients of texture_features wrt the four parameters; the mask is a
/// non-differentiable input treated as constant.
inline LapmGrads texture_backward(const Plane& mask, const LapmParams& p, const Plane& grad_out,
                                  double eps = 1e-8) {
    if (grad_out.data.size() != mask.data.size())
        throw std::invalid_argument("texture_backward: shape mismatch");
    LapmGrads g;
    for (std::size_t k = 0; k < mask.data.size(); ++k) {
        const double m = mask.data[k];
        const double z = p.w * m + p.bias;
        const double ez = std::exp(-z);
        const double den = 1.0 + ez + eps;
        const double num = p.gamma * z + p.beta;
        const double go = grad_out.data[k];
        const double dz = (p.gamma * den + num * ez) / (den * den);
        g.w += go * dz * m;
        g.bias += go * dz;
        g.gamma += go * z / den;
        g.beta += go / den;
    }
    return g;
}

struct LapmPyramid {
    std::vector<Plane> masks;     // binary planes at strides 2, 4, ...
    std::vector<Plane> features;  // texture_features of each mask
};

/// amplify -> BT.601 gray -> threshold, then repeated max-downsampling.
/// One shared 4-parameter set maps every mask level to features.
inline LapmPyramid lapm_pyramid(const RgbImageF& img, const LapmConfig& cfg, const LapmParams& p) {
    const int min_side = 1 << cfg.levels;
    if (cfg.levels < 1) throw std::invalid_argument("lapm_pyramid: levels must be >= 1");
    if (img.width < min_side || img.height < min_side)
        throw std::invalid_argument("lapm_pyramid: image must be at least " +
                                    std::to_string(min_side) + " px per side");
    const Plane mask0 = photomask(rgb_to_gray(amplify(img, cfg.lambda)), cfg.tau_photon);
    LapmPyramid out;
    Plane cur = mask0;
    for (int level = 0; level < cfg.levels; ++level) {
        cur = max_downsample2(cur);
        out.features.push_back(texture_features(cur, p, cfg.eps));
        out.masks.push_back(cur);
    }
    return out;
}

/// Fuses a single texture plane into a feature map.
enum class FuseMode { Concat, Add };

inline Tensor fuse_texture(const Tensor& fmap, const Plane& texture, FuseMode mode) {
    if (fmap.h != texture.height || fmap.w != texture.width)
        throw std::invalid_argument("fuse_texture: spatial mismatch");
    if (mode == FuseMode::Concat) {
        Tensor extra(fmap.n, 1, fmap.h, fmap.w);
        for (int in = 0; in < fmap.n; ++in)
            for (int ih = 0; ih < fmap.h; ++ih)
                for (int iw = 0; iw < fmap.w; ++iw)
                    extra.at(in, 0, ih, iw) = texture.at(ih, iw);
        return concat_channels(fmap, extra);
    }
    Tensor out = fmap;
    for (int in = 0; in < out.n; ++in)
        for (int c = 0; c < out.c; ++c)
            for (int ih = 0; ih < out.h; ++ih)
                for (int iw = 0; iw < out.w; ++iw) out.at(in, c, ih, iw) += texture.at(ih, iw);
    return out;
}

}  // namespace darkforge
