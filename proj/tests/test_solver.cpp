#include <doctest.h>

#include <cmath>
#include <vector>

#include "taser/model.hpp"
#include "taser/solver.hpp"
#include "test_util.hpp"

using namespace taser;
using testutil::quad_form;
using testutil::sign_candidate;

namespace {

PrecondProblem random_psd_precond(int n, std::uint64_t seed, double alpha = 0.99) {
    Rng rng(seed);
    RMatrix a(2 * n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < 2 * n; ++i) a(i, j) = rng.gauss();
    }
    RealProblem prob;
    prob.t = a.transpose() * a;
    prob.n_dim = n;
    return jacobi_precondition(prob, alpha);
}

double objective_of(const RMatrix& l, const RMatrix& t_true) {
    return (l * t_true * l.transpose()).trace();
}

}  // namespace

TEST_CASE("gradient step zeroes the identity fixed point") {
    PrecondProblem pre;
    pre.t_tilde = RMatrix::Identity(3, 3);
    pre.d_diag = RVector::Ones(3);
    pre.tau = 0.5;
    pre.mode = ProblemMode::coherent;

    TriangularFactor l = TriangularFactor::diagonal(RVector::Ones(3));
    const TriangularFactor v = gradient_step(l, pre);
    CHECK(v.l.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("zero step size leaves the factor unchanged") {
    PrecondProblem pre;
    pre.t_tilde = RMatrix::Random(4, 4);
    pre.t_tilde = (pre.t_tilde + pre.t_tilde.transpose()).eval();
    pre.d_diag = RVector::Ones(4);
    pre.tau = 0.0;
    TriangularFactor l = TriangularFactor::diagonal(RVector::Constant(4, 2.0));
    l.l(2, 0) = 0.7;
    const TriangularFactor v = gradient_step(l, pre);
    CHECK((v.l - l.l).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("analytic gradient matches central finite differences") {
    // seed-0 N=5 random PSD instance
    const PrecondProblem pre = random_psd_precond(5, 0);
    const int n = 5;
    Rng rng(17);
    TriangularFactor l;
    l.l = RMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) l.l(i, j) = rng.gauss();
    }

    const TriangularFactor v = gradient_step(l, pre);
    const double h = 1e-5;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            // gradient entry recovered from the update: V = L - tau * grad
            const double analytic = (l.l(i, j) - v.l(i, j)) / pre.tau;
            RMatrix lp = l.l, lm = l.l;
            lp(i, j) += h;
            lm(i, j) -= h;
            const double fd =
                (objective_of(lp, pre.t_tilde) - objective_of(lm, pre.t_tilde)) / (2.0 * h);
            CHECK(std::abs(analytic - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
        }
        for (int j = i + 1; j < n; ++j) CHECK(v.l(i, j) == 0.0);
    }
}

TEST_CASE("prox rescales a 3-4-5 column") {
    PrecondProblem pre;
    pre.t_tilde = RMatrix::Identity(2, 2);
    pre.d_diag = RVector::Ones(2);
    TriangularFactor v;
    v.l = RMatrix::Zero(2, 2);
    v.l(0, 0) = 3.0;
    v.l(1, 0) = 4.0;
    v.l(1, 1) = 1.0;
    const TriangularFactor out = prox_step(v, pre);
    CHECK(out.l(0, 0) == doctest::Approx(0.6));
    CHECK(out.l(1, 0) == doctest::Approx(0.8));
    CHECK(out.l(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("prox is the identity on feasible factors") {
    const PrecondProblem pre = random_psd_precond(4, 2);
    Rng rng(5);
    TriangularFactor v;
    v.l = RMatrix::Zero(4, 4);
    for (int j = 0; j < 4; ++j) {
        RVector col = RVector::Zero(4);
        for (int i = j; i < 4; ++i) col(i) = rng.gauss();
        col *= pre.d_diag(j) / col.norm();
        for (int i = j; i < 4; ++i) v.l(i, j) = col(i);
    }
    const TriangularFactor out = prox_step(v, pre);
    CHECK((out.l - v.l).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("prox is invariant to positive column scaling") {
    const PrecondProblem pre = random_psd_precond(5, 3);
    Rng rng(42);
    TriangularFactor v;
    v.l = RMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j <= i; ++j) v.l(i, j) = rng.gauss();
    }
    TriangularFactor scaled;
    scaled.l = 7.3 * v.l;
    const TriangularFactor a = prox_step(v, pre);
    const TriangularFactor b = prox_step(scaled, pre);
    CHECK((a.l - b.l).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("prox reports collapsed columns") {
    PrecondProblem pre;
    pre.t_tilde = RMatrix::Identity(2, 2);
    pre.d_diag = RVector::Ones(2);
    TriangularFactor v;
    v.l = RMatrix::Zero(2, 2);
    v.l(1, 1) = 1.0;  // column 0 is exactly zero
    CHECK_THROWS_AS(prox_step(v, pre), ZeroColumn);
}

TEST_CASE("solver recovers the noiseless 1x1 BPSK symbol") {
    CoherentInstance inst;
    inst.y = CVector::Constant(1, std::complex<double>(1.0, 0.0));
    inst.H = CMatrix::Constant(1, 1, std::complex<double>(1.0, 0.0));
    inst.constellation = Constellation::bpsk();
    const RealProblem prob = build_coherent_problem(inst);
    const PrecondProblem pre = jacobi_precondition(prob, 0.99);

    TaserConfig cfg;
    cfg.t_max = 20;
    cfg.alpha = 0.99;
    const TaserResult res = solve(pre, cfg);
    REQUIRE(res.signs.size() == 1);
    // exhaustive check over {+-1}: [+1, 1] attains the smaller objective
    CHECK(quad_form(prob.t, {1, 1}) < quad_form(prob.t, {-1, 1}));
    CHECK(res.signs[0] == 1);
}

TEST_CASE("iteration budget is honoured exactly when early stopping is off") {
    const PrecondProblem pre = random_psd_precond(6, 4);
    TaserConfig cfg;
    cfg.t_max = 13;
    cfg.convergence_tol = 0.0;
    const TaserResult res = solve(pre, cfg);
    CHECK(res.trace.iterations_run == 13);
    CHECK(res.trace.step_norm.size() == 13);
}

TEST_CASE("near-ML sign recovery at 16x4 BPSK, 8 dB") {
    // seed-indexed trials; TASER t_max=20 must match the exhaustive
    // minimizer of the binary quadratic form in at least 95 of 100.
    // alpha is system-dependent; tall systems want a smaller step than the
    // square-system default.
    const Constellation c = Constellation::bpsk();
    const double n0 = 4.0 / std::pow(10.0, 0.8);
    int hits = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto inst = testutil::random_coherent(16, 4, c, n0, trial);
        const RealProblem prob = build_coherent_problem(inst);
        const PrecondProblem pre = jacobi_precondition(prob, 0.75);
        TaserConfig cfg;
        cfg.t_max = 20;
        cfg.alpha = 0.75;
        const TaserResult res = solve(pre, cfg);

        double best = 1e300;
        unsigned best_code = 0;
        for (unsigned code = 0; code < 16u; ++code) {
            const double obj = quad_form(prob.t, sign_candidate(code, 4));
            if (obj < best) {
                best = obj;
                best_code = code;
            }
        }
        bool match = true;
        for (int i = 0; i < 4; ++i) {
            const int expect = ((best_code >> i) & 1u) ? -1 : 1;
            if (res.signs[static_cast<std::size_t>(i)] != expect) match = false;
        }
        if (match) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("triangularity and column norms hold after every iteration") {
    const PrecondProblem pre = random_psd_precond(7, 8);
    RMatrix l = RMatrix::Zero(7, 7);
    l.diagonal() = pre.d_diag;
    TriangularFactor f;
    f.l = l;
    for (int t = 0; t < 15; ++t) {
        f = prox_step(gradient_step(f, pre), pre);
        for (int i = 0; i < 7; ++i) {
            for (int j = i + 1; j < 7; ++j) CHECK(f.l(i, j) == 0.0);
        }
        for (int j = 0; j < 7; ++j) {
            const double norm = f.l.col(j).norm();
            CHECK(std::abs(norm - pre.d_diag(j)) < 1e-9 * pre.d_diag(j));
        }
    }
}

TEST_CASE("empirical convergence of the step norm") {
    // Step norm below 1e-6 within 1e4 iterations on at least 99 of 100
    // random PSD instances, drawn as detection-problem Gram matrices. Run
    // inside the provable step regime: the update applies tau to the
    // gradient tril(2 L T~), whose Lipschitz constant is 2||T~||_2, so
    // alpha < 1/2 keeps tau strictly below its inverse.
    const Constellation c = Constellation::bpsk();
    const double n0 = 8.0 / std::pow(10.0, 1.0);
    int converged = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = testutil::random_coherent(16, 8, c, n0, seed + 1000);
        const PrecondProblem pre = jacobi_precondition(build_coherent_problem(inst), 0.49);
        TaserConfig cfg;
        cfg.t_max = 10000;
        cfg.convergence_tol = 1e-6;
        const TaserResult res = solve(pre, cfg);
        if (res.trace.step_norm.back() < 1e-6) ++converged;
    }
    CHECK(converged >= 99);
}

TEST_CASE("scale consistency: (c T, tau/c) reproduces the iterates") {
    const PrecondProblem pre = random_psd_precond(6, 21);
    TaserConfig cfg;
    cfg.t_max = 25;

    PrecondProblem scaled = pre;
    scaled.t_tilde *= 2.0;
    scaled.tau /= 2.0;
    const TaserResult a = solve(pre, cfg);
    const TaserResult b = solve(scaled, cfg);
    REQUIRE(a.signs.size() == b.signs.size());
    for (std::size_t i = 0; i < a.signs.size(); ++i) CHECK(a.signs[i] == b.signs[i]);
    for (int t = 0; t < cfg.t_max; ++t) {
        // powers of two scale exactly
        CHECK(a.trace.step_norm[static_cast<std::size_t>(t)] ==
              b.trace.step_norm[static_cast<std::size_t>(t)]);
    }

    PrecondProblem scaled2 = pre;
    scaled2.t_tilde *= 7.3;
    scaled2.tau /= 7.3;
    const TaserResult d = solve(scaled2, cfg);
    for (int t = 0; t < cfg.t_max; ++t) {
        CHECK(d.trace.step_norm[static_cast<std::size_t>(t)] ==
              doctest::Approx(a.trace.step_norm[static_cast<std::size_t>(t)]).epsilon(1e-10));
    }
}

TEST_CASE("objective trace is recorded only on request") {
    const PrecondProblem pre = random_psd_precond(5, 33, 0.6);
    TaserConfig cfg;
    cfg.t_max = 8;
    const TaserResult silent = solve(pre, cfg);
    CHECK(silent.trace.objective.empty());

    cfg.trace_objective = true;
    const TaserResult traced = solve(pre, cfg);
    REQUIRE(traced.trace.objective.size() == 8);
    // spot check the last traced value against a direct evaluation is not
    // possible without the final factor; instead check monotone decrease of
    // the tail, which holds for these well-conditioned instances
    CHECK(traced.trace.objective.back() <=
          traced.trace.objective.front() + 1e-9 * std::abs(traced.trace.objective.front()));
}

TEST_CASE("solve dimensions and errors") {
    const PrecondProblem pre = random_psd_precond(4, 55);
    TaserConfig cfg;
    cfg.t_max = 0;
    CHECK_THROWS_AS(solve(pre, cfg), DomainError);
}
