#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evcosim {

// Deterministic random source.  mt19937_64 output is fully specified by the
// standard; the derived draws below are implemented here (not via std
// distributions, whose algorithms are implementation-defined) so that equal
// seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Uniform integer in [a,b], rejection sampled (no modulo bias).
    std::int64_t uniform_int(std::int64_t a, std::int64_t b) {
        const std::uint64_t span = static_cast<std::uint64_t>(b - a) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return a + static_cast<std::int64_t>(r % span);
    }

    // Box-Muller without spare caching: always consumes exactly two draws.
    double normal(double mean, double stddev) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Knuth multiplication method; draw count varies with lambda but is a
    // pure function of the stream, which keeps replays exact.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace evcosim
