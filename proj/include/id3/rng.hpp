#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace id3 {

// splitmix64; used to decorrelate seeds and derive substreams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a) {
    return mix64(mix64(master) ^ mix64(a + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return substream_seed(substream_seed(master, a), b);
}

// Deterministic random stream. Distributions are implemented here rather
// than with std::*_distribution so that sequences are reproducible across
// standard libraries and so substreams can be derived from plain seeds.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method; second deviate cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Uniform over {lo, ..., hi} inclusive via rejection.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        std::uint64_t range = hi - lo + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return lo + r % range;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace id3
