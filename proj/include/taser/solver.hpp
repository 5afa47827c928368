#pragma once

// Triangular approximate semidefinite relaxation solver: preconditioned
// forward-backward splitting on the Cholesky-factor formulation
//
//     minimize  Tr(L T L')   subject to  ||l_k||_2 = D_kk  for all k,
//
// with L lower triangular. One iteration is a gradient step
// V = L - tril(2 tau L T~) followed by the proximal step that rescales every
// column of V back to norm D_kk. The detected signs are read off the last
// row of the final iterate.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "taser/errors.hpp"
#include "taser/model.hpp"

namespace taser {

struct TriangularFactor {
    RMatrix l;  // dense storage; strict upper triangle kept identically zero

    int dim() const { return static_cast<int>(l.rows()); }

    static TriangularFactor diagonal(const RVector& d) {
        TriangularFactor f;
        f.l = RMatrix::Zero(d.size(), d.size());
        f.l.diagonal() = d;
        return f;
    }
};

struct TaserConfig {
    int t_max = 20;
    double alpha = 0.99;
    double convergence_tol = 0.0;  // 0 disables early stopping
    bool trace_objective = false;  // objective trace costs O(N^3) per iteration
};

struct TaserTrace {
    std::vector<double> objective;   // Tr(L T L'), signed objective; empty unless traced
    std::vector<double> step_norm;   // ||L(t) - L(t-1)||_F per iteration
    int iterations_run = 0;
    std::uint64_t multiplications = 0;  // real multiplies, systolic counting convention
};

struct TaserResult {
    std::vector<int> signs;  // +-1, length N-1
    TaserTrace trace;
};

namespace detail {

// out = l - tril(l * t_hat), computed on the lower triangle only. Entries of
// l above the diagonal are structurally zero, so the inner products stop at
// the row index. t_hat is expected to carry the 2*tau (and objective sign)
// scaling already, mirroring the precomputed T^ matrix of the systolic array.
inline void tril_gradient(const RMatrix& l, const RMatrix& t_hat, RMatrix& out,
                          std::uint64_t& mults) {
    const Eigen::Index n = l.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k <= i; ++k) {
                acc += l(i, k) * t_hat(k, j);
            }
            out(i, j) = l(i, j) - acc;
        }
        mults += static_cast<std::uint64_t>((i + 1) * (i + 1));
    }
}

// Rescales column k of v (rows k..N-1) to norm d(k) in place.
inline void prox_columns(RMatrix& v, const RVector& d, std::uint64_t& mults) {
    const Eigen::Index n = v.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
        double sq = 0.0;
        for (Eigen::Index i = k; i < n; ++i) {
            sq += v(i, k) * v(i, k);
        }
        mults += static_cast<std::uint64_t>(n - k);
        const double norm = std::sqrt(sq);
        if (norm < 1e-30) {
            throw ZeroColumn("column norm collapsed during proximal step");
        }
        const double scale = d(k) / norm;  // D_kk * invsqrt(||v_k||^2)
        mults += 1;
        for (Eigen::Index i = k; i < n; ++i) {
            v(i, k) *= scale;
        }
        mults += static_cast<std::uint64_t>(n - k);
    }
}

inline double traced_objective(const RMatrix& l, const RMatrix& t_true) {
    const Eigen::Index n = l.rows();
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k <= i; ++k) {
            double acc = 0.0;
            for (Eigen::Index m = 0; m <= i; ++m) {
                acc += l(i, m) * t_true(m, k);
            }
            obj += acc * l(i, k);
        }
    }
    return obj;
}

inline int sign_nonneg(double x) { return x < 0.0 ? -1 : 1; }

}  // namespace detail

inline TriangularFactor gradient_step(const TriangularFactor& l, const PrecondProblem& pre) {
    if (l.l.rows() != pre.t_tilde.rows()) {
        throw DimensionMismatch("factor and problem dimensions disagree");
    }
    const RMatrix t_hat = (pre.gradient_sign() * 2.0 * pre.tau) * pre.t_tilde;
    TriangularFactor out;
    out.l = RMatrix::Zero(l.l.rows(), l.l.cols());
    std::uint64_t mults = 0;
    detail::tril_gradient(l.l, t_hat, out.l, mults);
    return out;
}

inline TriangularFactor prox_step(const TriangularFactor& v, const PrecondProblem& pre) {
    if (v.l.rows() != pre.d_diag.size()) {
        throw DimensionMismatch("factor and problem dimensions disagree");
    }
    TriangularFactor out = v;
    std::uint64_t mults = 0;
    detail::prox_columns(out.l, pre.d_diag, mults);
    return out;
}

inline TaserResult solve(const PrecondProblem& pre, const TaserConfig& cfg) {
    if (cfg.t_max < 1) throw DomainError("t_max must be at least 1");
    const Eigen::Index n = pre.t_tilde.rows();

    // T^ = +-2 tau T~ is fixed across iterations (preprocessing, not counted).
    const RMatrix t_hat = (pre.gradient_sign() * 2.0 * pre.tau) * pre.t_tilde;
    const RMatrix t_true = pre.gradient_sign() * pre.t_tilde;

    RMatrix l = RMatrix::Zero(n, n);
    l.diagonal() = pre.d_diag;
    RMatrix v = RMatrix::Zero(n, n);

    TaserTrace trace;
    for (int t = 1; t <= cfg.t_max; ++t) {
        detail::tril_gradient(l, t_hat, v, trace.multiplications);
        detail::prox_columns(v, pre.d_diag, trace.multiplications);

        double step_sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double diff = v(i, j) - l(i, j);
                step_sq += diff * diff;
            }
        }
        const double step = std::sqrt(step_sq);
        trace.step_norm.push_back(step);
        l.swap(v);
        if (cfg.trace_objective) {
            trace.objective.push_back(detail::traced_objective(l, t_true));
        }
        trace.iterations_run = t;
        if (cfg.convergence_tol > 0.0 && step < cfg.convergence_tol) break;
    }

    TaserResult res;
    res.trace = std::move(trace);
    res.signs.resize(n - 1);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        res.signs[k] = detail::sign_nonneg(l(n - 1, k));
    }
    return res;
}

}  // namespace taser
