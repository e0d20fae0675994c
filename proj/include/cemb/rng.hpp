// rng.hpp
// Seeded random source used by every stochastic operation.
//
// Algorithm is fixed and named so runs reproduce exactly: MT19937-64 for the
// integer stream (bit-identical across platforms by the C++ standard), with
// uniform doubles taken from the top 53 bits and normals via the Box-Muller
// transform. Single-owner mutable state; do not share one Rng across threads.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"

namespace cemb {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal, Box-Muller with the sine value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]: keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    // Unbiased integer in [0, n), Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw param_error("Rng::below: n must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Matrix of i.i.d. N(mean, std^2) entries, deterministic given the Rng state.
template <class T = float>
Mat<T> rng_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std) {
    if (std < 0.0) throw param_error("rng_normal: std must be >= 0");
    Mat<T> m(rows, cols);
    if (std == 0.0) {
        m.fill(static_cast<T>(mean));
        return m;
    }
    for (auto& v : m.data) v = static_cast<T>(rng.normal(mean, std));
    return m;
}

} // namespace cemb
