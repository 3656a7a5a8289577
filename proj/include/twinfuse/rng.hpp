#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace twinfuse {

// splitmix64 step, used to derive stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator with explicitly-coded distributions. std::*_distribution
// output is implementation-defined, so uniform and normal draws are derived
// from the raw mt19937_64 stream directly to keep every artifact reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi], bias negligible for the ranges used here
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Box-Muller; consumes two uniforms per draw, no cached spare.
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Independent substream addressed by label, so call-site ordering
    // elsewhere cannot disturb it.
    Rng fork(std::uint64_t label) const { return Rng(mix_seed(seed_, label)); }

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
};

} // namespace twinfuse
