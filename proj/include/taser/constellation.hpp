#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "taser/errors.hpp"

namespace taser {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

enum class Modulation : std::uint8_t { bpsk, qpsk };

// Constant-modulus constellations with unit symbol energy. QPSK points are
// (+-1 +-j)/sqrt(2) so that E|s|^2 = 1 for both schemes and SNR definitions
// line up. Bit mapping is Gray: bit 0 is the sign of the real part, bit 1
// the sign of the imaginary part (0 -> +, 1 -> -).
class Constellation {
  public:
    static Constellation bpsk() { return Constellation(Modulation::bpsk, 1); }
    static Constellation qpsk() { return Constellation(Modulation::qpsk, 2); }

    Modulation kind() const { return kind_; }
    int bits_per_symbol() const { return bits_per_symbol_; }
    int size() const { return 1 << bits_per_symbol_; }

    // Candidate enumeration order: index = bit0 + 2*bit1.
    std::complex<double> point(int index) const {
        if (kind_ == Modulation::bpsk) {
            return {(index & 1) ? -1.0 : 1.0, 0.0};
        }
        const double re = (index & 1) ? -kInvSqrt2 : kInvSqrt2;
        const double im = (index & 2) ? -kInvSqrt2 : kInvSqrt2;
        return {re, im};
    }

    // Nearest constellation point to an unquantized estimate. sign(0) -> +1.
    int slice_index(std::complex<double> v) const {
        int idx = (v.real() < 0.0) ? 1 : 0;
        if (kind_ == Modulation::qpsk && v.imag() < 0.0) idx |= 2;
        return idx;
    }

    std::complex<double> slice(std::complex<double> v) const {
        return point(slice_index(v));
    }

    int index_of(std::complex<double> s, double tol = 1e-9) const {
        const int idx = slice_index(s);
        if (std::abs(point(idx) - s) > tol) {
            throw PilotNotInConstellation("symbol is not a constellation point");
        }
        return idx;
    }

    bool contains(std::complex<double> s, double tol = 1e-9) const {
        return std::abs(point(slice_index(s)) - s) <= tol;
    }

    // Gray-mapped bits of a constellation index, LSB-first (bit 0 = real sign).
    void append_bits(int index, std::vector<std::uint8_t>& out) const {
        out.push_back(static_cast<std::uint8_t>(index & 1));
        if (kind_ == Modulation::qpsk) {
            out.push_back(static_cast<std::uint8_t>((index >> 1) & 1));
        }
    }

  private:
    Constellation(Modulation kind, int bits) : kind_(kind), bits_per_symbol_(bits) {}

    Modulation kind_;
    int bits_per_symbol_;
};

}  // namespace taser
