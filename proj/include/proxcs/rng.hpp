#pragma once

#include <cmath>
#include <cstdint>

namespace proxcs {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic xoshiro256++ generator with hand-rolled distributions, so
/// that streams reproduce bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    /// Independent stream derived from (seed, tag); used to decouple
    /// e.g. generator init, discriminator init and batch shuffling.
    Rng(std::uint64_t seed, std::uint64_t tag)
        : Rng(mix(seed, tag)) {}

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1.
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(next()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Standard normal via Box-Muller (second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s = tag ^ 0xd1b54a32d192ed03ull;
        std::uint64_t b = splitmix64(s);
        s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        return splitmix64(s);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace proxcs
