#pragma once

// Deterministic RNG utilities. All normal variates go through an explicit
// Box-Muller transform so that a given seed produces the same stream on
// every platform (std::normal_distribution is implementation-defined).

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace taser {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a substream seed by folding coordinates into the master seed one
// splitmix step at a time. Distinct coordinate tuples give (with overwhelming
// probability) non-overlapping mt19937_64 streams.
inline std::uint64_t derive_stream(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> coords) {
    std::uint64_t s = master ^ 0x6a09e667f3bcc909ULL;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t c : coords) {
        s ^= c + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
        out = splitmix64(s);
    }
    return out;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform() {
        const std::uint64_t r = gen_();
        return (static_cast<double>(r >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller, one variate per call (pairs cached).
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> cgauss() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    std::uint64_t bits() { return gen_(); }

    // Uniform integer in [0, n).
    int below(int n) {
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace taser
