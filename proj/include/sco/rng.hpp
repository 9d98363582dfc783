#pragma once

// Self-contained PRNG so traces are bit-identical across platforms and runs;
// the standard distributions are implementation-defined and would not be.

#include <cmath>
#include <cstdint>

namespace sco {

struct splitmix64 {
    std::uint64_t state = 0;

    explicit splitmix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1]
    double next_unit() { return (next() >> 11) * 0x1.0p-53 + 0x1.0p-53; }

    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }
};

// Decorrelates parallel streams: stream index and purpose tag folded into the seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    splitmix64 s(seed ^ (tag * 0x9e3779b97f4a7c15ULL));
    s.state ^= s.next() + index;
    return s.next();
}

struct gaussian_stream {
    splitmix64 rng;
    double spare = 0.0;
    bool has_spare = false;

    explicit gaussian_stream(std::uint64_t seed) : rng(seed) {}

    double next() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double u1 = rng.next_unit();
        const double u2 = rng.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(theta);
        has_spare = true;
        return r * std::cos(theta);
    }
};

}  // namespace sco
