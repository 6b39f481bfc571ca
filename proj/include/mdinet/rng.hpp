#pragma once

#include <cmath>
#include <cstdint>

namespace mdinet {

// Counter-derived random streams. Every consumer of randomness derives its
// own stream from (seed, purpose, index...) so results never depend on how
// work is split across threads or on call ordering elsewhere in the program.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// SplitMix64 stream. Cheap to construct per pulse.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Box-Muller; one fresh draw per call.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Knuth sampler; fine for the sub-photon means used here.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a) {
    return mix64(mix64(seed) ^ mix64(a));
}
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix64(derive_stream(seed, a) ^ mix64(b + 0x632BE59BD9B4E019ull));
}
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                   std::uint64_t c) {
    return mix64(derive_stream(seed, a, b) ^ mix64(c + 0xD1B54A32D192ED03ull));
}

// Stream purposes, used as the first derivation index.
enum StreamPurpose : std::uint64_t {
    kStreamPulse = 1,
    kStreamSchedule = 2,
    kStreamCalibration = 3,
    kStreamPlant = 4,
    kStreamSessionKick = 5,
};

}  // namespace mdinet
