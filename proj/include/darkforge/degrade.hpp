#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "darkforge/image.hpp"
#include "darkforge/rng.hpp"
#include "darkforge/stats.hpp"
#include "darkforge/truncnorm.hpp"

namespace darkforge {

struct DegradeConfig {
    double tau_color = 0.5;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    double sigma_floor = 1e-6;  // below this the channel counts as constant
};

/// One sampled (mean, std) target pair per channel.
struct TargetSample {
    std::array<double, 3> target_mean{};
    std::array<double, 3> target_std{};
};

/// Six independent truncated-normal draws: mean then std, channel order R,G,B.
inline TargetSample sample_targets(const ChannelStatsSummary& summary, Rng& rng) {
    TargetSample t;
    for (int c = 0; c < 3; ++c) {
        const ChannelSummary& ch = summary.channels[c];
        t.target_mean[c] = truncnorm_sample(
            {ch.mean_median, ch.mean_spread, ch.mean_min, ch.mean_max}, rng);
        t.target_std[c] = truncnorm_sample(
            {ch.std_median, ch.std_spread, ch.std_min, ch.std_max}, rng);
    }
    return t;
}

/// Channel-wise affine remap to the target statistics, clipped to [0,255].
inline RgbImageU8 linear_transform(const RgbImageU8& img, const ImageStats& orig,
                                   const TargetSample& target, const DegradeConfig& cfg) {
    RgbImageU8 out(img.width, img.height);
    for (int c = 0; c < 3; ++c) {
        if (orig[c].std < cfg.sigma_floor) {
            const std::uint8_t v = clamp_round_u8(target.target_mean[c]);
            for (std::size_t k = c; k < out.data.size(); k += 3) out.data[k] = v;
            continue;
        }
        const double gain = target.target_std[c] / orig[c].std;
        const double mu_o = orig[c].mean;
        const double mu_t = target.target_mean[c];
        for (std::size_t k = c; k < img.data.size(); k += 3)
            out.data[k] = clamp_round_u8(gain * (img.data[k] - mu_o) + mu_t);
    }
    return out;
}

/// Per-pixel channel fractions I^c / (sum_k I^k + eps), flattened H*W*3.
inline std::vector<double> color_ratios(const RgbImageU8& img, double eps) {
    std::vector<double> out(img.data.size());
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        const std::uint8_t* px = &img.data[p * 3];
        const double denom = double(px[0]) + double(px[1]) + double(px[2]) + eps;
        for (int c = 0; c < 3; ++c) out[p * 3 + c] = px[c] / denom;
    }
    return out;
}

/// 1 where max_c |ratio_orig - ratio_adj| strictly exceeds tau.
inline std::vector<std::uint8_t> consistency_mask(const std::vector<double>& ratios_orig,
                                                  const std::vector<double>& ratios_adj,
                                                  double tau) {
    if (ratios_orig.size() != ratios_adj.size())
        throw std::invalid_argument("consistency_mask: shape mismatch");
    const std::size_t n = ratios_orig.size() / 3;
    std::vector<std::uint8_t> mask(n);
    for (std::size_t p = 0; p < n; ++p) {
        double m = 0.0;
        for (int c = 0; c < 3; ++c)
            m = std::max(m, std::abs(ratios_orig[p * 3 + c] - ratios_adj[p * 3 + c]));
        mask[p] = m > tau ? 1 : 0;
    }
    return mask;
}

/// Pre-rounding corrected values: masked pixels are rebuilt from the original
/// color ratios, preserving the adjusted pixel's channel sum.
inline std::vector<double> apply_correction_raw(const RgbImageU8& adj,
                                                const std::vector<double>& ratios_orig,
                                                const std::vector<std::uint8_t>& mask) {
    if (ratios_orig.size() != adj.data.size() || mask.size() != adj.pixels())
        throw std::invalid_argument("apply_correction: shape mismatch");
    std::vector<double> out(adj.data.size());
    for (std::size_t p = 0; p < adj.pixels(); ++p) {
        const std::uint8_t* px = &adj.data[p * 3];
        if (mask[p]) {
            const double sum = double(px[0]) + double(px[1]) + double(px[2]);
            for (int c = 0; c < 3; ++c) out[p * 3 + c] = ratios_orig[p * 3 + c] * sum;
        } else {
            for (int c = 0; c < 3; ++c) out[p * 3 + c] = px[c];
        }
    }
    return out;
}

inline RgbImageU8 apply_correction(const RgbImageU8& adj, const std::vector<double>& ratios_orig,
                                   const std::vector<std::uint8_t>& mask) {
    const std::vector<double> raw = apply_correction_raw(adj, ratios_orig, mask);
    RgbImageU8 out(adj.width, adj.height);
    for (std::size_t k = 0; k < raw.size(); ++k) out.data[k] = clamp_round_u8(raw[k]);
    return out;
}

/// Full degradation of one image with a deterministic per-image RNG stream.
inline RgbImageU8 degrade_image(const RgbImageU8& img, const ChannelStatsSummary& summary,
                                const DegradeConfig& cfg, const std::string& image_key) {
    Rng rng(derive_stream_seed(cfg.seed, image_key));
    const ImageStats orig = channel_mean_std(img);
    const TargetSample target = sample_targets(summary, rng);
    const RgbImageU8 adj = linear_transform(img, orig, target, cfg);
    const std::vector<double> ro = color_ratios(img, cfg.epsilon);
    const std::vector<double> ra = color_ratios(adj, cfg.epsilon);
    const std::vector<std::uint8_t> mask = consistency_mask(ro, ra, cfg.tau_color);
    return apply_correction(adj, ro, mask);
}

}  // namespace darkforge
