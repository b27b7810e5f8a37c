/*
 *  rng.hpp
 *  Seeded random number generation. Distributions are hand-rolled on top of
 *  the mt19937_64 bit stream because std::*_distribution sequences differ
 *  between standard library implementations.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bhsne {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Modulo bias is irrelevant at these ranges.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    // Standard normal via Marsaglia's polar method.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bhsne
