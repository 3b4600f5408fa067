#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "darkforge/image.hpp"

namespace darkforge {

/// Per-channel mean and population standard deviation of one image.
struct ChannelStats {
    double mean = 0.0;
    double std = 0.0;
};

using ImageStats = std::array<ChannelStats, 3>;  // R, G, B

/// Corpus-level summary of per-image channel statistics.
struct ChannelSummary {
    double mean_median = 0.0;
    double mean_spread = 0.0;
    double mean_min = 0.0;
    double mean_max = 0.0;
    double std_median = 0.0;
    double std_spread = 0.0;
    double std_min = 0.0;
    double std_max = 0.0;
};

struct ChannelStatsSummary {
    std::array<ChannelSummary, 3> channels;  // R, G, B
    std::size_t n_images = 0;
};

inline ImageStats channel_mean_std(const RgbImageU8& img) {
    if (img.empty()) throw std::invalid_argument("channel_mean_std: empty image");
    const double n = static_cast<double>(img.pixels());
    ImageStats out;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t k = c; k < img.data.size(); k += 3) sum += img.data[k];
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t k = c; k < img.data.size(); k += 3) {
            const double d = img.data[k] - mean;
            sq += d * d;
        }
        out[c].mean = mean;
        out[c].std = std::sqrt(sq / n);  // population std, divide by HW
    }
    return out;
}

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
inline Plane rgb_to_gray(const RgbImageF& img) {
    Plane out(img.width, img.height);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        const double* px = &img.data[p * 3];
        out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

namespace detail {

inline double median_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double population_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / n);
}

}  // namespace detail

inline ChannelStatsSummary summarize_corpus(const std::vector<ImageStats>& stats) {
    if (stats.empty()) throw std::invalid_argument("summarize_corpus: empty corpus");
    ChannelStatsSummary out;
    out.n_images = stats.size();
    for (int c = 0; c < 3; ++c) {
        std::vector<double> means, stds;
        means.reserve(stats.size());
        stds.reserve(stats.size());
        for (const auto& s : stats) {
            means.push_back(s[c].mean);
            stds.push_back(s[c].std);
        }
        ChannelSummary& ch = out.channels[c];
        ch.mean_median = detail::median_sorted(means);
        ch.mean_spread = detail::population_std(means);
        ch.mean_min = *std::min_element(means.begin(), means.end());
        ch.mean_max = *std::max_element(means.begin(), means.end());
        ch.std_median = detail::median_sorted(stds);
        ch.std_spread = detail::population_std(stds);
        ch.std_min = *std::min_element(stds.begin(), stds.end());
        ch.std_max = *std::max_element(stds.begin(), stds.end());
    }
    return out;
}

inline constexpr const char* kChannelNames[3] = {"R", "G", "B"};

inline nlohmann::json summary_to_json(const ChannelStatsSummary& s) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n_images"] = s.n_images;
    for (int c = 0; c < 3; ++c) {
        const ChannelSummary& ch = s.channels[c];
        j[kChannelNames[c]] = {
            {"mean_median", ch.mean_median}, {"mean_spread", ch.mean_spread},
            {"mean_min", ch.mean_min},       {"mean_max", ch.mean_max},
            {"std_median", ch.std_median},   {"std_spread", ch.std_spread},
            {"std_min", ch.std_min},         {"std_max", ch.std_max},
        };
    }
    return j;
}

inline ChannelStatsSummary summary_from_json(const nlohmann::json& j) {
    ChannelStatsSummary s;
    s.n_images = j.at("n_images").get<std::size_t>();
    for (int c = 0; c < 3; ++c) {
        const auto& jc = j.at(kChannelNames[c]);
        ChannelSummary& ch = s.channels[c];
        ch.mean_median = jc.at("mean_median").get<double>();
        ch.mean_spread = jc.at("mean_spread").get<double>();
        ch.mean_min = jc.at("mean_min").get<double>();
        ch.mean_max = jc.at("mean_max").get<double>();
        ch.std_median = jc.at("std_median").get<double>();
        ch.std_spread = jc.at("std_spread").get<double>();
        ch.std_min = jc.at("std_min").get<double>();
        ch.std_max = jc.at("std_max").get<double>();
    }
    return s;
}

}  // namespace darkforge
