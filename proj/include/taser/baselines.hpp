#pragma once

// Reference detectors: exhaustive ML (coherent and JED), linear MMSE,
// single-user SIMO lower bound, and single-pilot channel estimation
// followed by maximum-ratio combining.

#include <Eigen/Dense>
#include <Eigen/QR>
#include <limits>
#include <string>
#include <vector>

#include "taser/constellation.hpp"
#include "taser/errors.hpp"
#include "taser/model.hpp"
#include "taser/random.hpp"

namespace taser {

struct DetectionResult {
    CVector symbols;                 // hard decisions, constellation members
    std::vector<std::uint8_t> hard_bits;
    std::string detector_name;
};

namespace detail {

inline std::vector<std::uint8_t> bits_of(const CVector& symbols, const Constellation& c) {
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(symbols.size()) * c.bits_per_symbol());
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        c.append_bits(c.slice_index(symbols(i)), bits);
    }
    return bits;
}

inline void check_search_space(int symbols, int bits_per_symbol) {
    if (symbols * bits_per_symbol > 20) {
        throw SearchSpaceTooLarge("candidate set exceeds 2^20");
    }
}

}  // namespace detail

// Exact ML detection by exhaustive enumeration. The instance is first
// reduced with a QR decomposition (||y - Hs|| = ||Q'y - Rs|| up to a
// candidate-independent offset), then candidates are walked in lexicographic
// order with odometer-style incremental residual updates. Strictly smaller
// residuals win, so ties resolve to the lexicographically first candidate.
inline DetectionResult ml_exhaustive(const CoherentInstance& inst) {
    const int users = static_cast<int>(inst.H.cols());
    const int b = static_cast<int>(inst.H.rows());
    if (inst.y.size() != b) {
        throw DimensionMismatch("receive vector length does not match channel rows");
    }
    const Constellation& c = inst.constellation;
    detail::check_search_space(users, c.bits_per_symbol());
    const int q = c.size();

    const int m = std::min(b, users);
    Eigen::HouseholderQR<CMatrix> qr(inst.H);
    const CMatrix r_mat = qr.matrixQR().topRows(m).template triangularView<Eigen::Upper>();
    const CVector z = (qr.householderQ().adjoint() * inst.y).head(m);

    std::vector<int> idx(users, 0);
    CVector resid = z;
    for (int u = 0; u < users; ++u) {
        const int rows = std::min(u + 1, m);
        resid.head(rows) -= r_mat.col(u).head(rows) * c.point(0);
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_idx = idx;
    for (;;) {
        const double res = resid.squaredNorm();
        if (res < best) {
            best = res;
            best_idx = idx;
        }
        // odometer advance in lexicographic order (last digit fastest)
        int pos = users - 1;
        while (pos >= 0) {
            const int cur = idx[pos];
            const int next = cur + 1 < q ? cur + 1 : 0;
            const std::complex<double> delta = c.point(next) - c.point(cur);
            const int rows = std::min(pos + 1, m);
            resid.head(rows) -= r_mat.col(pos).head(rows) * delta;
            idx[pos] = next;
            if (next != 0) break;
            --pos;
        }
        if (pos < 0) break;
    }

    DetectionResult out;
    out.symbols.resize(users);
    for (int u = 0; u < users; ++u) out.symbols(u) = c.point(best_idx[u]);
    out.hard_bits = detail::bits_of(out.symbols, c);
    out.detector_name = "ml";
    return out;
}

// Exact ML JED by exhaustive search: maximizes ||Y s||_2 over all data
// vectors with the pilot slot pinned to s0. Returns the K data symbols.
inline DetectionResult ml_jed_exhaustive(const SimoBurst& burst) {
    const int k_slots = static_cast<int>(burst.Y.cols()) - 1;
    if (k_slots < 1) throw DimensionMismatch("burst needs K >= 1 data slots");
    const Constellation& c = burst.constellation;
    if (!c.contains(burst.s0)) {
        throw PilotNotInConstellation("pilot symbol is not in the constellation");
    }
    detail::check_search_space(k_slots, c.bits_per_symbol());
    const int q = c.size();

    std::vector<int> idx(k_slots, 0);
    CVector w = burst.Y.col(0) * burst.s0;
    for (int k = 0; k < k_slots; ++k) w += burst.Y.col(k + 1) * c.point(0);

    double best = -1.0;
    std::vector<int> best_idx = idx;
    for (;;) {
        const double gain = w.squaredNorm();
        if (gain > best) {
            best = gain;
            best_idx = idx;
        }
        int pos = k_slots - 1;
        while (pos >= 0) {
            const int cur = idx[pos];
            const int next = cur + 1 < q ? cur + 1 : 0;
            w += burst.Y.col(pos + 1) * (c.point(next) - c.point(cur));
            idx[pos] = next;
            if (next != 0) break;
            --pos;
        }
        if (pos < 0) break;
    }

    DetectionResult out;
    out.symbols.resize(k_slots);
    for (int k = 0; k < k_slots; ++k) out.symbols(k) = c.point(best_idx[k]);
    out.hard_bits = detail::bits_of(out.symbols, c);
    out.detector_name = "ml-jed";
    return out;
}

// Channel estimate h^ = Y s^ for a detected JED data vector (pilot included).
inline CVector jed_channel_estimate(const SimoBurst& burst, const CVector& data_symbols) {
    if (data_symbols.size() + 1 != burst.Y.cols()) {
        throw LengthMismatch("data symbol count does not match burst slots");
    }
    CVector s(burst.Y.cols());
    s(0) = burst.s0;
    s.tail(data_symbols.size()) = data_symbols;
    return burst.Y * s;
}

// Unquantized LMMSE estimate (H^H H + N0/Es I)^-1 H^H y with Es = 1.
inline CVector mmse_soft_estimate(const CoherentInstance& inst) {
    if (inst.y.size() != inst.H.rows()) {
        throw DimensionMismatch("receive vector length does not match channel rows");
    }
    if (!(inst.n0 > 0.0)) {
        throw DomainError("MMSE requires n0 > 0");
    }
    CMatrix g = inst.H.adjoint() * inst.H;
    g.diagonal().array() += inst.n0;
    Eigen::LDLT<CMatrix> ldlt(g);
    if (ldlt.info() != Eigen::Success) {
        throw SingularMatrix("regularized Gram matrix factorization failed");
    }
    return ldlt.solve(inst.H.adjoint() * inst.y);
}

inline DetectionResult mmse_detect(const CoherentInstance& inst) {
    const CVector soft = mmse_soft_estimate(inst);
    DetectionResult out;
    out.symbols.resize(soft.size());
    for (Eigen::Index i = 0; i < soft.size(); ++i) {
        out.symbols(i) = inst.constellation.slice(soft(i));
    }
    out.hard_bits = detail::bits_of(out.symbols, inst.constellation);
    out.detector_name = "mmse";
    return out;
}

// Monte-Carlo symbol error rate of a single-user, interference-free system
// with B receive antennas and MRC detection over i.i.d. Rayleigh channels.
inline double simo_lower_bound(int bs_antennas, const Constellation& c, double n0,
                               int trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("trials must be at least 1");
    Rng rng(seed);
    const double noise_scale = std::sqrt(n0);
    long errors = 0;
    CVector h(bs_antennas);
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < bs_antennas; ++i) h(i) = rng.cgauss();
        const int tx = rng.below(c.size());
        const std::complex<double> s = c.point(tx);
        std::complex<double> mf = 0.0;
        double energy = 0.0;
        for (int i = 0; i < bs_antennas; ++i) {
            const std::complex<double> y = h(i) * s + noise_scale * rng.cgauss();
            mf += std::conj(h(i)) * y;
            energy += std::norm(h(i));
        }
        if (c.slice_index(mf / energy) != tx) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(trials);
}

// MRC detection of the K data slots given a channel vector. The burst model
// is Y = h s^H + N, so slot k carries conj(s_k) and the matched-filter
// output estimates the conjugate symbol.
inline DetectionResult mrc_detect_with_channel(const SimoBurst& burst, const CVector& h) {
    if (h.size() != burst.Y.rows()) {
        throw DimensionMismatch("channel vector length does not match burst rows");
    }
    const int k_slots = static_cast<int>(burst.Y.cols()) - 1;
    const double energy = h.squaredNorm();
    DetectionResult out;
    out.symbols.resize(k_slots);
    for (int k = 0; k < k_slots; ++k) {
        const std::complex<double> est = std::conj(h.dot(burst.Y.col(k + 1)) / energy);
        out.symbols(k) = burst.constellation.slice(est);
    }
    out.hard_bits = detail::bits_of(out.symbols, burst.constellation);
    out.detector_name = "mrc-csir";
    return out;
}

// Single-pilot channel estimation followed by MRC: h^ = y_0 s0 / |s0|^2.
inline DetectionResult chest_mrc_detect(const SimoBurst& burst) {
    if (burst.Y.cols() < 2) throw DimensionMismatch("burst needs K >= 1 data slots");
    const CVector h_hat = burst.Y.col(0) * (burst.s0 / std::norm(burst.s0));
    DetectionResult out = mrc_detect_with_channel(burst, h_hat);
    out.detector_name = "chest-mrc";
    return out;
}

}  // namespace taser
