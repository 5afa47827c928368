#pragma once

// Real-valued problem construction for coherent MU-MIMO detection and for
// joint channel estimation and detection (JED) in SIMO bursts, plus Jacobi
// preconditioning of the resulting quadratic forms.
//
// Both detection problems reduce to
//     minimize  s~' T s~   over  s~ = [s_bar; 1],  s_bar in {-1,+1}^(N-1)
// where T is a Gram matrix (coherent, positive semidefinite) or a negated
// Gram matrix (JED, negative semidefinite). For QPSK the 1/sqrt(2) symbol
// scale is folded into the channel blocks so the binary feasible set is
// exactly {-1,+1}^(N-1) while symbols keep unit energy.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "taser/constellation.hpp"
#include "taser/errors.hpp"

namespace taser {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

struct CoherentInstance {
    CVector y;                    // B receive samples
    CMatrix H;                    // B x U channel matrix
    Constellation constellation = Constellation::bpsk();
    double n0 = 0.0;              // complex noise variance per entry
};

struct SimoBurst {
    CMatrix Y;                    // B x (K+1) receive matrix, slot 0 is the pilot
    std::complex<double> s0{1.0, 0.0};
    Constellation constellation = Constellation::bpsk();
    double n0 = 0.0;
};

enum class ProblemMode : std::uint8_t { coherent, jed };
enum class SignConvention : std::uint8_t { psd_min, nsd_min };

struct RealProblem {
    RMatrix t;                    // N x N symmetric
    int n_dim = 0;
    ProblemMode mode = ProblemMode::coherent;
    Constellation constellation = Constellation::bpsk();
    SignConvention sign_convention = SignConvention::psd_min;

    // Number of complex symbols carried by the sign vector (U or K).
    int symbol_count() const {
        const int nb = n_dim - 1;
        return constellation.kind() == Modulation::qpsk ? nb / 2 : nb;
    }
};

struct PrecondProblem {
    RMatrix t_tilde;              // D^-1 P D^-1 with unit diagonal, P = +-T
    RVector d_diag;               // D_kk = sqrt(|T_kk|)
    double tau = 0.0;             // alpha / ||t_tilde||_2
    double alpha = 0.0;
    double spectral_norm = 0.0;
    ProblemMode mode = ProblemMode::coherent;

    // Signed gradient scale: the stored t_tilde is always PSD-normalized, so
    // JED (NSD objective) flips the sign of the gradient step.
    double gradient_sign() const {
        return mode == ProblemMode::jed ? -1.0 : 1.0;
    }
};

namespace detail {

// Stacks the complex matrix M into its real-valued form
// [Re(M) -Im(M); Im(M) Re(M)] (QPSK) or [Re(M); Im(M)] (BPSK).
inline RMatrix real_expand(const CMatrix& m, Modulation kind) {
    const Eigen::Index rows = m.rows();
    const Eigen::Index cols = m.cols();
    if (kind == Modulation::bpsk) {
        RMatrix out(2 * rows, cols);
        out.topRows(rows) = m.real();
        out.bottomRows(rows) = m.imag();
        return out;
    }
    RMatrix out(2 * rows, 2 * cols);
    out.topLeftCorner(rows, cols) = m.real();
    out.topRightCorner(rows, cols) = -m.imag();
    out.bottomLeftCorner(rows, cols) = m.imag();
    out.bottomRightCorner(rows, cols) = m.real();
    return out;
}

inline RVector real_stack(const CVector& v) {
    RVector out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

}  // namespace detail

// Builds T for coherent ML detection: s~' T s~ = ||y - H s||^2 for every
// feasible sign vector. T = A'A with A = [M, -y_bar], so T is PSD.
inline RealProblem build_coherent_problem(const CoherentInstance& inst) {
    if (inst.y.size() != inst.H.rows()) {
        throw DimensionMismatch("receive vector length does not match channel rows");
    }
    if (inst.H.rows() < 1 || inst.H.cols() < 1) {
        throw DimensionMismatch("channel matrix must be at least 1x1");
    }
    const Modulation kind = inst.constellation.kind();
    const double sym_scale = kind == Modulation::qpsk ? kInvSqrt2 : 1.0;

    const RMatrix m = detail::real_expand(inst.H * sym_scale, kind);
    const RVector yb = detail::real_stack(inst.y);

    const Eigen::Index nb = m.cols();
    RMatrix a(m.rows(), nb + 1);
    a.leftCols(nb) = m;
    a.col(nb) = -yb;

    RealProblem prob;
    prob.t = a.transpose() * a;
    prob.n_dim = static_cast<int>(nb) + 1;
    prob.mode = ProblemMode::coherent;
    prob.constellation = inst.constellation;
    prob.sign_convention = SignConvention::psd_min;
    return prob;
}

// Builds T for ML JED: s~' T s~ = -||y0 s0 + Yr sr||^2, so minimizing the
// quadratic form maximizes ||Y s||_2 with the pilot slot pinned. T = -A'A.
inline RealProblem build_jed_problem(const SimoBurst& burst) {
    const Eigen::Index slots = burst.Y.cols();
    if (burst.Y.rows() < 1 || slots < 2) {
        throw DimensionMismatch("burst needs at least one BS antenna and K >= 1 data slots");
    }
    if (!burst.constellation.contains(burst.s0)) {
        throw PilotNotInConstellation("pilot symbol is not in the constellation");
    }
    const Modulation kind = burst.constellation.kind();
    const double sym_scale = kind == Modulation::qpsk ? kInvSqrt2 : 1.0;

    const CMatrix yr = burst.Y.rightCols(slots - 1);
    const CVector y0 = burst.Y.col(0) * burst.s0;

    const RMatrix m = detail::real_expand(yr * sym_scale, kind);
    const RVector yb = detail::real_stack(y0);

    const Eigen::Index nb = m.cols();
    RMatrix a(m.rows(), nb + 1);
    a.leftCols(nb) = m;
    a.col(nb) = yb;

    RealProblem prob;
    prob.t = -(a.transpose() * a);
    prob.n_dim = static_cast<int>(nb) + 1;
    prob.mode = ProblemMode::jed;
    prob.constellation = burst.constellation;
    prob.sign_convention = SignConvention::nsd_min;
    return prob;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration, started
// from the all-ones vector. 200 iterations max or relative change < 1e-8.
// If a start vector lies in (or falls into) the null space the iteration
// restarts from a deterministic ramp, then an alternating pattern; the
// all-ones vector is exactly orthogonal to the dominant eigenvector for
// some small hand-built instances.
inline double spectral_norm_power(const RMatrix& m) {
    const Eigen::Index n = m.rows();
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    const double collapse_tol = 1e-15 * static_cast<double>(n) * scale;

    for (int attempt = 0; attempt < 3; ++attempt) {
        RVector x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double di = static_cast<double>(i);
            x(i) = attempt == 0 ? 1.0 : (attempt == 1 ? di + 1.0 : (i % 2 ? -1.0 : 1.0));
        }
        x /= x.norm();
        double lambda = 0.0;
        bool collapsed = false;
        for (int it = 0; it < 200; ++it) {
            RVector mx = m * x;
            const double norm = mx.norm();
            if (norm <= collapse_tol) {
                collapsed = true;
                break;
            }
            const double prev = lambda;
            lambda = norm;
            x = mx / norm;
            if (it > 0 && std::abs(lambda - prev) <= 1e-8 * lambda) break;
        }
        if (!collapsed) return lambda;
    }
    return 0.0;
}

// Jacobi preconditioning: D = diag(sqrt(|T_kk|)), t_tilde = D^-1 P D^-1 with
// P = T (coherent) or -T (JED) so the stored matrix always has a unit
// diagonal. Step size tau = alpha / ||t_tilde||_2.
inline PrecondProblem jacobi_precondition(const RealProblem& prob, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in (0, 1)");
    }
    const int n = prob.n_dim;
    const double objective_sign = prob.sign_convention == SignConvention::nsd_min ? -1.0 : 1.0;

    RVector d(n);
    for (int k = 0; k < n; ++k) {
        const double pkk = objective_sign * prob.t(k, k);
        if (!(pkk > 0.0)) {
            throw NonpositiveDiagonal("problem diagonal entry is not positive");
        }
        d(k) = std::sqrt(pkk);
    }

    PrecondProblem pre;
    pre.t_tilde = objective_sign * prob.t;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            pre.t_tilde(i, j) /= d(i) * d(j);
        }
    }
    pre.d_diag = d;
    pre.alpha = alpha;
    pre.spectral_norm = spectral_norm_power(pre.t_tilde);
    pre.tau = alpha / pre.spectral_norm;
    pre.mode = prob.mode;
    return pre;
}

// Maps the solver's binary output back to complex symbols. Coherent QPSK
// pairs sign i with sign i+U as real/imaginary parts scaled by 1/sqrt(2);
// JED returns the K recovered data symbols (the pilot slot is excluded by
// construction).
inline CVector extract_complex_solution(const std::vector<int>& signs,
                                        const RealProblem& prob) {
    if (static_cast<int>(signs.size()) != prob.n_dim - 1) {
        throw LengthMismatch("sign vector length does not match problem dimension");
    }
    const int count = prob.symbol_count();
    CVector s(count);
    if (prob.constellation.kind() == Modulation::qpsk) {
        for (int i = 0; i < count; ++i) {
            s(i) = std::complex<double>(signs[i] * kInvSqrt2, signs[i + count] * kInvSqrt2);
        }
    } else {
        for (int i = 0; i < count; ++i) {
            s(i) = std::complex<double>(static_cast<double>(signs[i]), 0.0);
        }
    }
    return s;
}

}  // namespace taser
