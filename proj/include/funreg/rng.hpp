#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace funreg {

/// Deterministic random stream with explicit sampling transforms, so that a
/// (seed, stream index) pair fully pins every draw. Independent replication
/// streams are derived with a splitmix64 mix, which keeps results identical
/// no matter how replications are scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// splitmix64-mixed substream seed for (seed, index).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Fresh stream for (construction seed, index); independent of draws
    /// already made from this stream.
    Rng substream(std::uint64_t index) const { return Rng(derive(seed_, index)); }

    /// Uniform on the open interval (0, 1).
    double uniform01() {
        const std::uint64_t bits = engine_();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection keeps the distribution exactly uniform
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double gauss() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Student t with the given degrees of freedom, as normal over
    /// sqrt(chi-square/df).
    double student_t(int df) {
        double chi2 = 0;
        for (int i = 0; i < df; ++i) {
            const double z = gauss();
            chi2 += z * z;
        }
        return gauss() / std::sqrt(chi2 / df);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace funreg
