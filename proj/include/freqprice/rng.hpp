#pragma once

// Portable seeded randomness. std::mt19937_64 output is fixed by the
// standard; the normal transform is done here (Box-Muller) because the
// standard distributions are implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace freqprice {

inline constexpr const char* kRngAlgorithm = "mt19937_64/splitmix64-stream-seed/box-muller-v1";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the private stream owned by one (seed, stream id) pair.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream_id) {
    std::uint64_t s = seed ^ fnv1a64(stream_id);
    splitmix64(s);
    return splitmix64(s);
}

class NormalStream {
public:
    NormalStream() : NormalStream(0, "") {}
    NormalStream(std::uint64_t seed, std::string_view stream_id) : engine_(stream_seed(seed, stream_id)) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    bool operator==(const NormalStream&) const = default;

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace freqprice
