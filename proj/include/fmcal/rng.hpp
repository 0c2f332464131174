#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace fmcal {

// Finalizer from the splitmix64 generator. Bijective, so distinct inputs
// never collide.
inline std::uint64_t mix_bits(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic sub-stream seed derivation. Every independent random stream
// in the toolkit gets its seed through this, so results never depend on
// scheduling or thread count.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = mix_bits(base ^ (a * 0x9e3779b97f4a7c15ull));
    return mix_bits(s ^ (b * 0xd1b54a32d192ed03ull));
}

// Thin wrapper over mt19937_64 with hand-rolled variate transforms.
// std::uniform_real_distribution and friends are implementation-defined,
// which would break cross-toolchain reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1), 53-bit resolution
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // strictly inside (0, 1); safe to feed into log()
    double open01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo <= hi)) throw std::invalid_argument("uniform: lo > hi");
        return lo + (hi - lo) * u01();
    }

    bool bernoulli(double p) { return u01() < p; }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    // standard normal, Marsaglia polar with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mean, double stdev) { return mean + stdev * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fmcal
