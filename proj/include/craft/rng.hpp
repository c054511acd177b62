#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace craft {

// All randomness in the project flows from one 64-bit root seed. Substreams are
// derived by name so adding a consumer never perturbs existing streams.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    RngStream(uint64_t root_seed, std::string_view name) : gen_(splitmix64(root_seed ^ fnv1a64(name))) {}

    uint64_t bits() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + int64_t(uniform() * double(hi - lo + 1));
    }

    // Box-Muller; hand-rolled so the sequence does not depend on the stdlib.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Normal truncated to [-2 sigma, 2 sigma] by rejection.
    double trunc_normal(double sigma) {
        double v = normal();
        while (v < -2.0 || v > 2.0) v = normal();
        return v * sigma;
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace craft
