#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pmucat {

/// Deterministic random source. Wraps mt19937_64 but derives doubles and
/// normal variates itself so that identical seeds give identical streams
/// regardless of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// One Gaussian variate via Box-Muller. No caching of the second
    /// variate: one call consumes exactly two uniforms.
    double normal(double mean, double stddev) {
        double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + stddev * z;
    }

    /// Normal truncated from below by rejection. A zero/negative stddev
    /// degenerates to max(mean, lower) without consuming draws.
    double truncated_normal(double mean, double stddev, double lower) {
        if (stddev <= 0.0) return mean < lower ? lower : mean;
        for (int i = 0; i < 256; ++i) {
            double x = normal(mean, stddev);
            if (x >= lower) return x;
        }
        return lower;  // config puts the floor far above the mean
    }

private:
    std::mt19937_64 gen_;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pmucat
