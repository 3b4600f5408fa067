#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace darkforge {

using int128 = __int128;

inline std::string i128_to_string(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
    std::string s;
    while (u > 0) {
        s.insert(s.begin(), static_cast<char>('0' + int(u % 10)));
        u /= 10;
    }
    return neg ? "-" + s : s;
}

inline nlohmann::json i128_to_json(int128 v) {
    if (v >= 0 && v <= int128(INT64_MAX)) return static_cast<std::int64_t>(v);
    if (v < 0 && v >= int128(INT64_MIN)) return static_cast<std::int64_t>(v);
    return i128_to_string(v);
}

/// Exact rational over 128-bit integers, kept reduced with positive denominator.
struct Rational {
    int128 num = 0;
    int128 den = 1;

    Rational() = default;
    Rational(int128 n, int128 d = 1) : num(n), den(d) { reduce(); }

    void reduce() {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        int128 a = num < 0 ? -num : num, b = den;
        while (b != 0) {
            int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
    }

    bool is_integer() const { return den == 1; }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

    Rational operator-(const Rational& o) const {
        return Rational(num * o.den - o.num * den, den * o.den);
    }

    std::string to_string() const {
        if (den == 1) return i128_to_string(num);
        return i128_to_string(num) + "/" + i128_to_string(den);
    }
};

/// Kernel/feature-map shape record; h, w are OUTPUT spatial dims.
struct LayerSpec {
    long long c_in = 0;
    long long c_out = 0;
    long long kh = 1;
    long long kw = 1;
    long long h = 1;
    long long w = 1;
    long long groups = 1;
    std::string kind = "standard-conv";  // standard-conv | fsl-conv | lapm | upsample
};

inline void check_spec(const LayerSpec& s) {
    if (s.c_in < 1 || s.c_out < 1 || s.kh < 1 || s.kw < 1 || s.h < 1 || s.w < 1 || s.groups < 1)
        throw std::invalid_argument("LayerSpec: non-positive field");
}

/// Standard convolution FLOPs: 2 * C1 * C2 * Kh * Kw * H * W.
inline int128 conv_flops(const LayerSpec& s) {
    check_spec(s);
    return int128(2) * s.c_in * s.c_out * s.kh * s.kw * s.h * s.w;
}

/// Grouped convolution FLOPs: 2 * (C2/g) * C1 * Kh * Kw * H * W.
inline int128 conv_flops_grouped(const LayerSpec& s, long long g) {
    check_spec(s);
    if (g < 1 || s.c_in % g != 0 || s.c_out % g != 0)
        throw std::invalid_argument("conv_flops_grouped: g must divide C1 and C2");
    return int128(2) * (s.c_out / g) * s.c_in * s.kh * s.kw * s.h * s.w;
}

/// F(g) = FLOPs_g - FLOPs; zero at g = 1.
inline int128 flops_increment(const LayerSpec& s, long long g) {
    return conv_flops_grouped(s, g) - conv_flops(s);
}

/// MACs of a standard convolution: HW(C1 + C2) + C1*C2*Kh*Kw.
inline int128 conv_macs(const LayerSpec& s) {
    check_spec(s);
    return int128(s.h) * s.w * (s.c_in + s.c_out) + int128(s.c_in) * s.c_out * s.kh * s.kw;
}

/// Grouped MACs: activation traffic is unchanged, weight traffic shrinks to
/// C1*C2*Kh*Kw / g (per-group weights summed over g groups).
inline Rational conv_macs_grouped(const LayerSpec& s, long long g) {
    check_spec(s);
    if (g < 1 || s.c_in % g != 0 || s.c_out % g != 0)
        throw std::invalid_argument("conv_macs_grouped: g must divide C1 and C2");
    const int128 act = int128(s.h) * s.w * (s.c_in + s.c_out);
    const int128 wk = int128(s.c_in) * s.c_out * s.kh * s.kw;
    return Rational(act * g + wk, g);
}

/// M(g) = MACs_g - MACs = C1*C2*Kh*Kw*(1/g - 1); exact rational.
inline Rational macs_increment(const LayerSpec& s, long long g) {
    check_spec(s);
    if (g < 1) throw std::invalid_argument("macs_increment: g < 1");
    const int128 wk = int128(s.c_in) * s.c_out * s.kh * s.kw;
    return Rational(wk * (1 - g), g);
}

struct CurvePoint {
    long long g = 1;
    int128 f = 0;
    Rational m;
};

struct IncrementCurve {
    std::vector<CurvePoint> points;
    std::vector<int128> marginal_gain;  // |F(g_{k+1})| - |F(g_k)|
};

inline IncrementCurve increment_curve(const LayerSpec& s, const std::vector<long long>& g_values) {
    IncrementCurve out;
    for (long long g : g_values)
        out.points.push_back({g, flops_increment(s, g), macs_increment(s, g)});
    for (std::size_t k = 0; k + 1 < out.points.size(); ++k) {
        int128 a = out.points[k].f < 0 ? -out.points[k].f : out.points[k].f;
        int128 b = out.points[k + 1].f < 0 ? -out.points[k + 1].f : out.points[k + 1].f;
        out.marginal_gain.push_back(b - a);
    }
    return out;
}

struct FslLayerCost {
    int128 flops = 0;
    int128 weight_params = 0;
};

/// Both 3x3 stages run at the stage-1 output resolution.
inline FslLayerCost fsl_layer_cost(long long c1, long long c2, long long h_out, long long w_out) {
    if (c2 % 2 != 0) throw std::invalid_argument("fsl_layer_cost: C2 must be even");
    const long long c0 = c2 / 2;
    FslLayerCost out;
    LayerSpec s1{c1, c0, 3, 3, h_out, w_out, 1, "standard-conv"};
    LayerSpec s2{c0, c0, 3, 3, h_out, w_out, 1, "standard-conv"};
    out.flops = conv_flops(s1) + conv_flops(s2);
    out.weight_params = int128(c0) * c1 * 9 + int128(c0) * c0 * 9;
    return out;
}

inline constexpr const char* kLapmFlopConvention =
    "lapm-flops-v1: mul=1 add=1 compare=1 multiply-add=2 exp=4 negate=1 div=1; "
    "stages: amplify(3 mul/px) + bt601-gray(3 mul + 2 add/px) + threshold(1 cmp/px) + "
    "per-level[2x2 max-pool(3 cmp/px) + gated 1x1 conv(z mac=2, num mac=2, exp(-z)=5, "
    "den adds=2, div=1 -> 12/px)]";

struct LapmCost {
    int128 amplify = 0;
    int128 grayscale = 0;
    int128 threshold = 0;
    std::vector<int128> per_level;  // pool + gated conv per pyramid level
    int128 total = 0;
    std::string convention = kLapmFlopConvention;
};

inline LapmCost lapm_cost(long long h, long long w, int levels) {
    if (h < 1 || w < 1 || levels < 1) throw std::invalid_argument("lapm_cost: bad dims");
    LapmCost out;
    const int128 px = int128(h) * w;
    out.amplify = 3 * px;
    out.grayscale = 5 * px;
    out.threshold = px;
    out.total = out.amplify + out.grayscale + out.threshold;
    long long lh = h, lw = w;
    for (int k = 0; k < levels; ++k) {
        lh /= 2;
        lw /= 2;
        const int128 lpx = int128(lh) * lw;
        const int128 cost = 3 * lpx + 12 * lpx;
        out.per_level.push_back(cost);
        out.total += cost;
    }
    return out;
}

struct NetworkCost {
    std::vector<int128> layer_flops;
    std::vector<int128> layer_params;
    int128 total_flops = 0;
    int128 total_params = 0;
};

inline NetworkCost network_cost(const std::vector<LayerSpec>& layers) {
    NetworkCost out;
    long long prev_out = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& s = layers[i];
        check_spec(s);
        if (prev_out > 0 && s.c_in != prev_out)
            throw std::invalid_argument("network_cost: layer " + std::to_string(i) +
                                        " input channels " + std::to_string(s.c_in) +
                                        " do not match previous output " + std::to_string(prev_out));
        int128 flops = 0, params = 0;
        if (s.kind == "standard-conv") {
            flops = conv_flops_grouped(s, s.groups);
            params = int128(s.c_in / s.groups) * s.c_out * s.kh * s.kw;
        } else if (s.kind == "fsl-conv") {
            FslLayerCost c = fsl_layer_cost(s.c_in, s.c_out, s.h, s.w);
            flops = c.flops;
            params = c.weight_params;
        } else if (s.kind == "lapm") {
            flops = 15 * int128(s.h) * s.w;  // pool + gated conv, see convention
            params = 0;                      // the 4 scalars are shared network-wide
        } else if (s.kind == "upsample") {
            flops = int128(s.c_out) * s.h * s.w;  // the alpha multiply per output
            params = 0;
        } else {
            throw std::invalid_argument("network_cost: unknown kind at layer " + std::to_string(i));
        }
        out.layer_flops.push_back(flops);
        out.layer_params.push_back(params);
        out.total_flops += flops;
        out.total_params += params;
        prev_out = s.c_out;
    }
    return out;
}

inline nlohmann::json network_cost_to_json(const std::vector<LayerSpec>& layers,
                                           const NetworkCost& c) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["layers"] = nlohmann::json::array();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& s = layers[i];
        j["layers"].push_back({{"kind", s.kind},
                               {"c_in", s.c_in},
                               {"c_out", s.c_out},
                               {"kh", s.kh},
                               {"kw", s.kw},
                               {"h", s.h},
                               {"w", s.w},
                               {"groups", s.groups},
                               {"flops", i128_to_json(c.layer_flops[i])},
                               {"params", i128_to_json(c.layer_params[i])}});
    }
    j["total_flops"] = i128_to_json(c.total_flops);
    j["total_params"] = i128_to_json(c.total_params);
    return j;
}

}  // namespace darkforge
