#pragma once

#include <cmath>
#include <cstdint>

namespace sls {

// Counter-free splitmix64 generator with hand-rolled distributions so that
// streams are reproducible independent of the standard library in use.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        next_u64();
        next_u64();
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    int64_t uniform_int(int64_t n) {
        return int64_t(next_u64() % uint64_t(n));
    }

    // Box-Muller, one value per call (the sine twin is discarded to keep the
    // stream position independent of call parity)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // independent child stream; tag selects the branch
    Rng fork(uint64_t tag) const {
        uint64_t mixed = state_ ^ (tag * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull);
        return Rng(mixed);
    }

private:
    uint64_t state_;
};

// deterministic per-iteration / per-trial seed derivation
inline uint64_t derive_seed(uint64_t root, uint64_t stream) {
    uint64_t z = root ^ (stream * 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace sls
