#pragma once

#include <cstdint>

namespace clv {

/// splitmix64 stream. Small, fast and fully portable, so seeded runs are
/// byte-for-byte reproducible across platforms (std:: distributions are not).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (lo, hi).
    double uniform(double lo, double hi) {
        double u = uniform();
        return lo + (hi - lo) * u;
    }

private:
    std::uint64_t state_;
};

/// Counter-based subseed: member index -> independent stream seed. Used to
/// partition ensemble work deterministically, independent of worker count.
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
    return g.next();
}

}  // namespace clv
