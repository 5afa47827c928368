#pragma once

// Bit-accurate model of the 14-bit fixed-point datapath. Word widths follow
// the hardware: L~ and V entries use 8 fraction bits except the bottom row
// (7 bits), the constant corner element L~_{N,N} has 5 fraction bits, the
// precomputed T^ = 2*tau*T~ matrix uses 11 fraction bits, and the inverse
// square root is a 2048-entry lookup table with 14-bit words (13 fraction
// bits). Quantization rounds to nearest-even and saturates; MAC chains keep
// the accumulator at full product width and round once at the end.

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <vector>

#include "taser/errors.hpp"
#include "taser/model.hpp"
#include "taser/solver.hpp"

namespace taser {

struct QFormat {
    int total_bits = 14;
    int frac_bits = 0;
    bool is_signed = true;

    std::int32_t max_raw() const {
        return is_signed ? (std::int32_t{1} << (total_bits - 1)) - 1
                         : (std::int32_t{1} << total_bits) - 1;
    }
    std::int32_t min_raw() const {
        return is_signed ? -(std::int32_t{1} << (total_bits - 1)) : 0;
    }
    double lsb() const { return std::ldexp(1.0, -frac_bits); }

    bool operator==(const QFormat& o) const {
        return total_bits == o.total_bits && frac_bits == o.frac_bits && is_signed == o.is_signed;
    }
};

struct FxValue {
    std::int32_t raw = 0;
    QFormat fmt;

    double value() const { return std::ldexp(static_cast<double>(raw), -fmt.frac_bits); }
};

enum class FxRounding { round_nearest_even };

namespace fxdetail {

inline std::int64_t round_half_even(double v) {
    const double fl = std::floor(v);
    const double diff = v - fl;
    const std::int64_t base = static_cast<std::int64_t>(fl);
    if (diff > 0.5) return base + 1;
    if (diff < 0.5) return base;
    return (base % 2 == 0) ? base : base + 1;
}

// Arithmetic shift right by `shift` with round-to-nearest-even; negative
// shifts are exact left shifts.
inline std::int64_t round_shift(std::int64_t v, int shift) {
    if (shift <= 0) return v << (-shift);
    const std::int64_t q = v >> shift;
    const std::int64_t rem = v - (q << shift);
    const std::int64_t half = std::int64_t{1} << (shift - 1);
    if (rem > half) return q + 1;
    if (rem < half) return q;
    return (q % 2 == 0) ? q : q + 1;
}

inline std::int32_t saturate(std::int64_t v, const QFormat& fmt) {
    const std::int64_t hi = fmt.max_raw();
    const std::int64_t lo = fmt.min_raw();
    if (v > hi) return static_cast<std::int32_t>(hi);
    if (v < lo) return static_cast<std::int32_t>(lo);
    return static_cast<std::int32_t>(v);
}

}  // namespace fxdetail

// Nearest representable value, saturating at the format bounds.
inline FxValue fx_quantize(double x, QFormat fmt,
                           FxRounding = FxRounding::round_nearest_even) {
    const double scaled = std::ldexp(x, fmt.frac_bits);
    std::int64_t raw;
    const double limit = 1e18;
    if (scaled >= limit) {
        raw = fmt.max_raw();
    } else if (scaled <= -limit) {
        raw = fmt.min_raw();
    } else {
        raw = fxdetail::round_half_even(scaled);
    }
    return {fxdetail::saturate(raw, fmt), fmt};
}

// acc - a*b: the full-width product is rounded once into the accumulator
// format, then subtracted and saturated.
inline FxValue fx_mac(FxValue acc, FxValue a, FxValue b) {
    const std::int64_t wide = static_cast<std::int64_t>(a.raw) * static_cast<std::int64_t>(b.raw);
    const int shift = a.fmt.frac_bits + b.fmt.frac_bits - acc.fmt.frac_bits;
    const std::int64_t prod = fxdetail::saturate(fxdetail::round_shift(wide, shift), acc.fmt);
    return {fxdetail::saturate(static_cast<std::int64_t>(acc.raw) - prod, acc.fmt), acc.fmt};
}

// Inverse square root table: 2^11 entries, 14-bit words with 13 fraction
// bits. The input is interpreted as an unsigned (14, 11) word covering
// [0, 8); the address is the word's 11 most significant bits, and each
// entry holds round(2^13 / sqrt(cell midpoint)). Entries for inputs below
// 1/4 saturate at the word maximum, so the rated input range is [1/4, 8).
struct InvSqrtLut {
    std::array<std::uint16_t, 2048> table{};
    QFormat input_format{14, 11, false};

    static const InvSqrtLut& standard() {
        static const InvSqrtLut lut = make();
        return lut;
    }

    static InvSqrtLut make() {
        InvSqrtLut lut;
        for (int i = 0; i < 2048; ++i) {
            const double mid = std::ldexp(static_cast<double>(i) + 0.5, -8);
            const double entry = std::round(std::ldexp(1.0, 13) / std::sqrt(mid));
            lut.table[static_cast<std::size_t>(i)] =
                static_cast<std::uint16_t>(std::min(entry, 16383.0));
        }
        return lut;
    }

    double cell_midpoint(int index) const {
        return std::ldexp(static_cast<double>(index) + 0.5, -8);
    }
};

inline FxValue inv_sqrt_lookup(FxValue x, const InvSqrtLut& lut) {
    if (x.raw <= 0) throw DomainError("inverse square root requires a positive input");
    const int shift = x.fmt.frac_bits - lut.input_format.frac_bits;
    std::int64_t raw14 = fxdetail::round_shift(x.raw, shift);
    if (raw14 > lut.input_format.max_raw()) raw14 = lut.input_format.max_raw();
    if (raw14 < 0) raw14 = 0;
    const int index = static_cast<int>(raw14 >> 3);
    return {static_cast<std::int32_t>(lut.table[static_cast<std::size_t>(index)]),
            QFormat{14, 13, false}};
}

// One 14-bit word per line, lower-case hex, for hardware cross-checks.
inline void write_lut_hex(std::ostream& os, const InvSqrtLut& lut) {
    for (const std::uint16_t w : lut.table) {
        os << std::hex << std::setw(4) << std::setfill('0') << static_cast<unsigned>(w) << '\n';
    }
    os << std::dec;
}

// Final fixed-point state, decoded to doubles, for inspection in tests and
// hardware cross-checks. Values are in the rescaled problem domain: the
// diagonal targets are 2^c_exp * D_kk.
struct FxSolveDebug {
    RMatrix l_final;
    int c_exp = 0;
    int p_exp = 0;
};

// Fixed-point TASER. Runs the same iteration as the floating-point solver
// but entirely in modeled 14-bit arithmetic:
//   - the problem is rescaled by a power of two so the largest off-corner
//     D_kk lands in [4, 8), filling the integer range of the (14, 8) words;
//   - T^ = +-2*tau*T~ is pre-quantized to (14, 11);
//   - the corner element L~_{N,N} is held constant in a (14, 5) register and
//     its column is never rescaled (it has no processing element);
//   - squared column norms are shifted by a per-problem even exponent so the
//     working point lands mid-table before the LUT lookup, and the exponent
//     is compensated in the D_jj multiply.
// Early stopping is not supported: like the hardware, the loop always runs
// t_max iterations.
inline std::vector<int> taser_solve_fx(const PrecondProblem& pre, const TaserConfig& cfg,
                                       const InvSqrtLut& lut = InvSqrtLut::standard(),
                                       FxSolveDebug* debug = nullptr) {
    const int n = static_cast<int>(pre.t_tilde.rows());
    if (n < 2) throw DomainError("problem dimension must be at least 2");
    if (n > 65) throw DomainError("array sizes beyond N = 65 are not modeled");
    if (cfg.t_max < 1) throw DomainError("t_max must be at least 1");

    const QFormat fmt_body{14, 8, true};    // rows 1..N-1 of L~ and V
    const QFormat fmt_bottom{14, 7, true};  // bottom row
    const QFormat fmt_corner{14, 5, true};
    const QFormat fmt_that{14, 11, true};
    const QFormat fmt_d{14, 8, true};
    const QFormat fmt_scale{14, 11, true};

    const auto row_frac = [&](int i) { return i == n - 1 ? fmt_bottom.frac_bits : fmt_body.frac_bits; };

    // Power-of-two normalization of the off-corner diagonal cluster.
    double dmax = 0.0;
    double log_sum = 0.0;
    for (int k = 0; k < n - 1; ++k) {
        dmax = std::max(dmax, pre.d_diag(k));
        log_sum += std::log2(pre.d_diag(k));
    }
    if (!(dmax > 0.0)) throw DomainError("nonpositive diagonal scale");
    const int c_exp = 2 - static_cast<int>(std::floor(std::log2(dmax)));

    // Even LUT exponent centering the cluster of squared norms near 2.
    const double cluster_log2 = 2.0 * (log_sum / (n - 1) + c_exp);
    const int p_exp = 2 * static_cast<int>(std::lround((1.0 - cluster_log2) / 2.0));

    std::vector<std::int32_t> that(static_cast<std::size_t>(n) * n);
    const double grad = pre.gradient_sign() * 2.0 * pre.tau;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            that[static_cast<std::size_t>(i) * n + j] =
                fx_quantize(grad * pre.t_tilde(i, j), fmt_that).raw;
        }
    }

    std::vector<std::int32_t> d_raw(n);
    for (int k = 0; k < n - 1; ++k) {
        d_raw[k] = fx_quantize(std::ldexp(pre.d_diag(k), c_exp), fmt_d).raw;
    }
    const std::int32_t corner = fx_quantize(std::ldexp(pre.d_diag(n - 1), c_exp), fmt_corner).raw;

    std::vector<std::int32_t> l(static_cast<std::size_t>(n) * n, 0);
    std::vector<std::int32_t> v(static_cast<std::size_t>(n) * n, 0);
    const auto at = [n](std::vector<std::int32_t>& m, int i, int j) -> std::int32_t& {
        return m[static_cast<std::size_t>(i) * n + j];
    };
    for (int k = 0; k < n - 1; ++k) at(l, k, k) = d_raw[k];
    at(l, n - 1, n - 1) = corner;

    for (int t = 0; t < cfg.t_max; ++t) {
        // V = L - tril(L * T^), accumulated at full product width.
        for (int i = 0; i < n; ++i) {
            const int fi = row_frac(i);
            const int jmax = (i == n - 1) ? n - 2 : i;  // corner is pinned
            for (int j = 0; j <= jmax; ++j) {
                std::int64_t acc = static_cast<std::int64_t>(at(l, i, j)) << fmt_that.frac_bits;
                for (int k = 0; k <= i; ++k) {
                    std::int64_t prod = static_cast<std::int64_t>(at(l, i, k)) *
                                        that[static_cast<std::size_t>(k) * n + j];
                    if (i == n - 1 && k == n - 1) {
                        prod <<= fmt_bottom.frac_bits - fmt_corner.frac_bits;
                    }
                    acc -= prod;
                }
                at(v, i, j) = fxdetail::saturate(
                    fxdetail::round_shift(acc, fmt_that.frac_bits), QFormat{14, fi, true});
            }
        }

        // Column norms, inverse square root via LUT, rescale. Column N has
        // no PE and keeps the constant corner value.
        for (int j = 0; j < n - 1; ++j) {
            std::int64_t q = 0;  // 16 fraction bits
            for (int i = j; i < n; ++i) {
                std::int64_t sq = static_cast<std::int64_t>(at(v, i, j)) * at(v, i, j);
                if (i == n - 1) sq <<= 2 * (fmt_body.frac_bits - fmt_bottom.frac_bits);
                q += sq;
            }
            if (q <= 0) throw DomainError("column norm collapsed in fixed-point iteration");

            std::int64_t raw14 = fxdetail::round_shift(q, 2 * fmt_body.frac_bits -
                                                              lut.input_format.frac_bits - p_exp);
            if (raw14 > lut.input_format.max_raw()) raw14 = lut.input_format.max_raw();
            if (raw14 < 1) raw14 = 1;
            const std::uint16_t inv = lut.table[static_cast<std::size_t>(raw14 >> 3)];

            // scale_j = D_jj * invsqrt * 2^(p/2), broadcast in (14, 11)
            const std::int64_t wide = static_cast<std::int64_t>(d_raw[j]) * inv;
            const int shift = fmt_d.frac_bits + 13 - fmt_scale.frac_bits - p_exp / 2;
            const std::int32_t scale =
                fxdetail::saturate(fxdetail::round_shift(wide, shift), fmt_scale);

            for (int i = j; i < n; ++i) {
                const int fi = row_frac(i);
                const std::int64_t prod = static_cast<std::int64_t>(at(v, i, j)) * scale;
                at(l, i, j) = fxdetail::saturate(
                    fxdetail::round_shift(prod, fmt_scale.frac_bits), QFormat{14, fi, true});
            }
        }
    }

    if (debug) {
        debug->l_final = RMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const int fi = (i == n - 1) ? fmt_bottom.frac_bits : fmt_body.frac_bits;
            for (int j = 0; j <= i; ++j) {
                const int f = (i == n - 1 && j == n - 1) ? fmt_corner.frac_bits : fi;
                debug->l_final(i, j) = std::ldexp(static_cast<double>(at(l, i, j)), -f);
            }
        }
        debug->c_exp = c_exp;
        debug->p_exp = p_exp;
    }

    std::vector<int> signs(n - 1);
    for (int k = 0; k < n - 1; ++k) {
        signs[k] = at(l, n - 1, k) < 0 ? -1 : 1;
    }
    return signs;
}

}  // namespace taser
