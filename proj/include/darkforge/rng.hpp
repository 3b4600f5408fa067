#pragma once

#include <cstdint>
#include <string_view>

namespace darkforge {

/// splitmix64 step; also the mix function used to derive per-image streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic 64-bit stream seed from (global seed, image key).
/// FNV-1a over the key bytes, then mixed with the seed via splitmix64.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view key) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t s = seed ^ h;
    return splitmix64(s);
}

/// Small deterministic generator (splitmix64 stream).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1) — never returns an exact endpoint.
    double next_open() {
        double u;
        do {
            u = next_double();
        } while (u <= 0.0);
        return u;
    }

private:
    std::uint64_t state_;
};

}  // namespace darkforge
