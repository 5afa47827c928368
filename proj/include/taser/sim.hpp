#pragma once

// Monte-Carlo experiment engine: channel/noise generation, detector
// orchestration, error counting and CSV/JSON reporting. Every trial is a
// pure function of (config, substream seed); substreams are derived by
// hashing the master seed with the cell coordinates (system, SNR, t_max,
// trial index) so reruns are byte-identical and cells never share RNG
// state. Detector name and arithmetic are deliberately left out of the
// hash: paired detectors see the same channel realizations, which sharpens
// curve-to-curve comparisons without coupling the error counters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "taser/baselines.hpp"
#include "taser/constellation.hpp"
#include "taser/errors.hpp"
#include "taser/fixed_point.hpp"
#include "taser/hw_model.hpp"
#include "taser/model.hpp"
#include "taser/random.hpp"
#include "taser/solver.hpp"

namespace taser {

enum class Arithmetic : std::uint8_t { floating, fixed };

struct SweepConfig {
    int b = 0;                       // BS antennas
    int u_or_k = 0;                  // users U (coherent) or data slots K (JED)
    ProblemMode mode = ProblemMode::coherent;
    Constellation constellation = Constellation::bpsk();
    std::vector<double> snr_db;
    std::vector<int> t_max_list{20};
    double alpha = 0.99;
    int trials = 10000;
    std::uint64_t seed = 0;
    std::vector<std::string> detectors;
    Arithmetic arithmetic = Arithmetic::floating;
};

struct SweepRow {
    std::string detector;
    ProblemMode mode = ProblemMode::coherent;
    int b = 0;
    int u_or_k = 0;
    std::string modulation;
    std::string arithmetic;
    double alpha = 0.0;
    int t_max = 0;                   // 0 for non-iterative detectors
    double snr_db = 0.0;
    long trials = 0;
    long vector_errors = 0;
    long bit_errors = 0;
    double ver = 0.0;
    double ber = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// 95% Wilson score interval for a binomial proportion. With zero observed
// errors the lower bound is exactly 0 (one-sided interval); no error floor
// is ever fabricated.
inline WilsonInterval wilson_ci(long errors, long trials, double z = 1.959963984540054) {
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval ci;
    ci.lo = errors == 0 ? 0.0 : std::max(0.0, center - half);
    ci.hi = errors == trials ? 1.0 : std::min(1.0, center + half);
    return ci;
}

struct CoherentTrial {
    CoherentInstance inst;
    CVector s_true;
    std::vector<int> s_idx;
};

struct JedTrial {
    SimoBurst burst;
    CVector s_data;        // K transmitted data symbols (pilot excluded)
    std::vector<int> s_idx;
    CVector h_true;
};

// y = H s + n with H ~ CN(0,1) entries (drawn column-major), s uniform over
// the constellation, n ~ CN(0, n0).
inline CoherentTrial generate_coherent_trial(int b, int u, const Constellation& c,
                                             double n0, Rng& rng) {
    if (b < 1 || u < 1) throw DimensionMismatch("system dimensions must be positive");
    CoherentTrial trial;
    trial.inst.H.resize(b, u);
    for (int j = 0; j < u; ++j) {
        for (int i = 0; i < b; ++i) trial.inst.H(i, j) = rng.cgauss();
    }
    trial.s_true.resize(u);
    trial.s_idx.resize(u);
    for (int i = 0; i < u; ++i) {
        trial.s_idx[i] = rng.below(c.size());
        trial.s_true(i) = c.point(trial.s_idx[i]);
    }
    const double ns = std::sqrt(n0);
    trial.inst.y = trial.inst.H * trial.s_true;
    for (int i = 0; i < b; ++i) trial.inst.y(i) += ns * rng.cgauss();
    trial.inst.constellation = c;
    trial.inst.n0 = n0;
    return trial;
}

// Block-fading SIMO burst Y = h s^H + N over K+1 slots; the pilot slot
// carries the constellation's first point.
inline JedTrial generate_jed_trial(int b, int k, const Constellation& c,
                                   double n0, Rng& rng) {
    if (b < 1 || k < 1) throw DimensionMismatch("system dimensions must be positive");
    JedTrial trial;
    trial.h_true.resize(b);
    for (int i = 0; i < b; ++i) trial.h_true(i) = rng.cgauss();
    trial.s_data.resize(k);
    trial.s_idx.resize(k);
    CVector s_full(k + 1);
    s_full(0) = c.point(0);
    for (int i = 0; i < k; ++i) {
        trial.s_idx[i] = rng.below(c.size());
        trial.s_data(i) = c.point(trial.s_idx[i]);
        s_full(i + 1) = trial.s_data(i);
    }
    const double ns = std::sqrt(n0);
    trial.burst.Y.resize(b, k + 1);
    for (int j = 0; j <= k; ++j) {
        for (int i = 0; i < b; ++i) {
            trial.burst.Y(i, j) = trial.h_true(i) * std::conj(s_full(j)) + ns * rng.cgauss();
        }
    }
    trial.burst.s0 = s_full(0);
    trial.burst.constellation = c;
    trial.burst.n0 = n0;
    return trial;
}

inline double snr_db_to_n0(double snr_db, ProblemMode mode, int u_or_k) {
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    const double signal = mode == ProblemMode::coherent ? static_cast<double>(u_or_k) : 1.0;
    return signal / snr_lin;
}

inline int problem_dim(ProblemMode mode, const Constellation& c, int u_or_k) {
    const int per_symbol = c.kind() == Modulation::qpsk ? 2 : 1;
    (void)mode;
    return per_symbol * u_or_k + 1;
}

inline int worker_thread_count() {
    if (const char* env = std::getenv("TASER_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace simdetail {

enum class DetectorKind { taser, ml, mmse, simo, ml_jed, chest_mrc, mrc_csir };

inline DetectorKind detector_kind(const std::string& name, ProblemMode mode) {
    if (mode == ProblemMode::coherent) {
        if (name == "taser") return DetectorKind::taser;
        if (name == "ml") return DetectorKind::ml;
        if (name == "mmse") return DetectorKind::mmse;
        if (name == "simo") return DetectorKind::simo;
    } else {
        if (name == "taser") return DetectorKind::taser;
        if (name == "ml-jed") return DetectorKind::ml_jed;
        if (name == "chest-mrc") return DetectorKind::chest_mrc;
        if (name == "mrc-csir") return DetectorKind::mrc_csir;
    }
    throw UnknownDetector("unknown detector for this mode: " + name);
}

inline bool is_iterative(DetectorKind k) { return k == DetectorKind::taser; }

struct ErrorCounts {
    long vector_errors = 0;
    long bit_errors = 0;
};

inline int bit_diff(int a, int b, int bits) {
    int x = (a ^ b) & ((1 << bits) - 1);
    int count = 0;
    while (x) {
        count += x & 1;
        x >>= 1;
    }
    return count;
}

inline void count_errors(const CVector& detected, const std::vector<int>& true_idx,
                         const Constellation& c, ErrorCounts& counts) {
    bool any = false;
    for (std::size_t i = 0; i < true_idx.size(); ++i) {
        const int got = c.slice_index(detected(static_cast<Eigen::Index>(i)));
        if (got != true_idx[i]) {
            any = true;
            counts.bit_errors += bit_diff(got, true_idx[i], c.bits_per_symbol());
        }
    }
    if (any) ++counts.vector_errors;
}

// Genie-aided matched-filter bound: every user is detected with the other
// users' contributions removed from the same receive vector.
inline void simo_bound_trial(const CoherentTrial& trial, ErrorCounts& counts) {
    const Constellation& c = trial.inst.constellation;
    const CVector noise = trial.inst.y - trial.inst.H * trial.s_true;
    bool any = false;
    for (int u = 0; u < trial.s_true.size(); ++u) {
        const auto col = trial.inst.H.col(u);
        const std::complex<double> est =
            col.dot(col * trial.s_true(u) + noise) / col.squaredNorm();
        const int got = c.slice_index(est);
        if (got != trial.s_idx[static_cast<std::size_t>(u)]) {
            any = true;
            counts.bit_errors += bit_diff(got, trial.s_idx[static_cast<std::size_t>(u)],
                                          c.bits_per_symbol());
        }
    }
    if (any) ++counts.vector_errors;
}

inline void run_coherent_trial(DetectorKind kind, const SweepConfig& cfg, int t_max,
                               const CoherentTrial& trial, ErrorCounts& counts) {
    const Constellation& c = cfg.constellation;
    switch (kind) {
        case DetectorKind::ml:
            count_errors(ml_exhaustive(trial.inst).symbols, trial.s_idx, c, counts);
            return;
        case DetectorKind::mmse:
            count_errors(mmse_detect(trial.inst).symbols, trial.s_idx, c, counts);
            return;
        case DetectorKind::simo:
            simo_bound_trial(trial, counts);
            return;
        case DetectorKind::taser: {
            const RealProblem prob = build_coherent_problem(trial.inst);
            const PrecondProblem pre = jacobi_precondition(prob, cfg.alpha);
            TaserConfig tcfg;
            tcfg.t_max = t_max;
            tcfg.alpha = cfg.alpha;
            const std::vector<int> signs = cfg.arithmetic == Arithmetic::fixed
                                               ? taser_solve_fx(pre, tcfg)
                                               : solve(pre, tcfg).signs;
            count_errors(extract_complex_solution(signs, prob), trial.s_idx, c, counts);
            return;
        }
        default:
            throw UnknownDetector("detector not available in coherent mode");
    }
}

inline void run_jed_trial(DetectorKind kind, const SweepConfig& cfg, int t_max,
                          const JedTrial& trial, ErrorCounts& counts) {
    const Constellation& c = cfg.constellation;
    switch (kind) {
        case DetectorKind::ml_jed:
            count_errors(ml_jed_exhaustive(trial.burst).symbols, trial.s_idx, c, counts);
            return;
        case DetectorKind::chest_mrc:
            count_errors(chest_mrc_detect(trial.burst).symbols, trial.s_idx, c, counts);
            return;
        case DetectorKind::mrc_csir:
            count_errors(mrc_detect_with_channel(trial.burst, trial.h_true).symbols,
                         trial.s_idx, c, counts);
            return;
        case DetectorKind::taser: {
            const RealProblem prob = build_jed_problem(trial.burst);
            const PrecondProblem pre = jacobi_precondition(prob, cfg.alpha);
            TaserConfig tcfg;
            tcfg.t_max = t_max;
            tcfg.alpha = cfg.alpha;
            const std::vector<int> signs = cfg.arithmetic == Arithmetic::fixed
                                               ? taser_solve_fx(pre, tcfg)
                                               : solve(pre, tcfg).signs;
            count_errors(extract_complex_solution(signs, prob), trial.s_idx, c, counts);
            return;
        }
        default:
            throw UnknownDetector("detector not available in JED mode");
    }
}

}  // namespace simdetail

// Runs one (detector, snr, t_max) cell; trials are split across worker
// threads and each trial reseeds from its own substream, so the counts do
// not depend on the thread count.
inline simdetail::ErrorCounts run_cell(const SweepConfig& cfg, simdetail::DetectorKind kind,
                                       double snr_db, int t_max) {
    const double n0 = snr_db_to_n0(snr_db, cfg.mode, cfg.u_or_k);
    const std::uint64_t snr_key = [&] {
        std::uint64_t k;
        static_assert(sizeof(double) == sizeof(std::uint64_t));
        std::memcpy(&k, &snr_db, sizeof(k));
        return k;
    }();
    const std::uint64_t mode_key = cfg.mode == ProblemMode::jed ? 1 : 0;
    const std::uint64_t mod_key = cfg.constellation.kind() == Modulation::qpsk ? 1 : 0;

    const auto run_range = [&](int lo, int hi, simdetail::ErrorCounts& counts,
                               std::exception_ptr& error) {
        int trial_index = lo;
        try {
            for (; trial_index < hi; ++trial_index) {
                const std::uint64_t stream = derive_stream(
                    cfg.seed, {mode_key, static_cast<std::uint64_t>(cfg.b),
                               static_cast<std::uint64_t>(cfg.u_or_k), mod_key, snr_key,
                               static_cast<std::uint64_t>(t_max),
                               static_cast<std::uint64_t>(trial_index)});
                Rng rng(stream);
                if (cfg.mode == ProblemMode::coherent) {
                    const CoherentTrial trial =
                        generate_coherent_trial(cfg.b, cfg.u_or_k, cfg.constellation, n0, rng);
                    simdetail::run_coherent_trial(kind, cfg, t_max, trial, counts);
                } else {
                    const JedTrial trial =
                        generate_jed_trial(cfg.b, cfg.u_or_k, cfg.constellation, n0, rng);
                    simdetail::run_jed_trial(kind, cfg, t_max, trial, counts);
                }
            }
        } catch (const std::exception& e) {
            std::ostringstream oss;
            oss << "trial " << trial_index << ": " << e.what();
            error = std::make_exception_ptr(std::runtime_error(oss.str()));
        }
    };

    const int threads = std::min(worker_thread_count(), std::max(1, cfg.trials / 64));
    std::vector<simdetail::ErrorCounts> partial(threads);
    std::vector<std::exception_ptr> errors(threads);
    if (threads == 1) {
        run_range(0, cfg.trials, partial[0], errors[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) {
            const int lo = static_cast<int>(static_cast<long long>(cfg.trials) * w / threads);
            const int hi = static_cast<int>(static_cast<long long>(cfg.trials) * (w + 1) / threads);
            pool.emplace_back(run_range, lo, hi, std::ref(partial[w]), std::ref(errors[w]));
        }
        for (auto& th : pool) th.join();
    }
    simdetail::ErrorCounts total;
    for (int w = 0; w < threads; ++w) {
        if (errors[w]) std::rethrow_exception(errors[w]);
        total.vector_errors += partial[w].vector_errors;
        total.bit_errors += partial[w].bit_errors;
    }
    return total;
}

inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
    if (cfg.trials < 1) throw DomainError("trials must be at least 1");
    if (cfg.snr_db.empty()) throw DomainError("SNR list must not be empty");
    if (cfg.detectors.empty()) throw UnknownDetector("detector list must not be empty");
    if (cfg.t_max_list.empty()) throw DomainError("t_max list must not be empty");

    std::vector<SweepRow> rows;
    for (const std::string& name : cfg.detectors) {
        const simdetail::DetectorKind kind = simdetail::detector_kind(name, cfg.mode);
        const std::vector<int> tmaxes =
            simdetail::is_iterative(kind) ? cfg.t_max_list : std::vector<int>{0};
        for (const double snr : cfg.snr_db) {
            for (const int t_max : tmaxes) {
                const simdetail::ErrorCounts counts = run_cell(cfg, kind, snr, t_max);
                const long bits_per_vector =
                    static_cast<long>(cfg.u_or_k) * cfg.constellation.bits_per_symbol();
                if (counts.bit_errors > counts.vector_errors * bits_per_vector) {
                    throw std::logic_error("bit error count exceeds vector error bound");
                }
                SweepRow row;
                row.detector = name;
                row.mode = cfg.mode;
                row.b = cfg.b;
                row.u_or_k = cfg.u_or_k;
                row.modulation =
                    cfg.constellation.kind() == Modulation::qpsk ? "qpsk" : "bpsk";
                row.arithmetic = (kind == simdetail::DetectorKind::taser &&
                                  cfg.arithmetic == Arithmetic::fixed)
                                     ? "fixed"
                                     : "float";
                row.alpha = cfg.alpha;
                row.t_max = t_max;
                row.snr_db = snr;
                row.trials = cfg.trials;
                row.vector_errors = counts.vector_errors;
                row.bit_errors = counts.bit_errors;
                row.ver = static_cast<double>(counts.vector_errors) / cfg.trials;
                row.ber = static_cast<double>(counts.bit_errors) /
                          (static_cast<double>(cfg.trials) * bits_per_vector);
                const WilsonInterval ci = wilson_ci(counts.vector_errors, cfg.trials);
                row.ci_lo = ci.lo;
                row.ci_hi = ci.hi;
                rows.push_back(std::move(row));
            }
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.detector != b.detector) return a.detector < b.detector;
        if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
        return a.t_max < b.t_max;
    });
    return rows;
}

namespace simdetail {

inline std::string format_double(double v, int precision = 9) {
    std::ostringstream oss;
    oss.precision(precision);
    oss << v;
    return oss.str();
}

}  // namespace simdetail

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "detector,mode,B,U_or_K,modulation,arithmetic,alpha,t_max,snr_db,trials,"
          "vector_errors,bit_errors,ver,ber,ci_lo,ci_hi\n";
    for (const SweepRow& r : rows) {
        os << r.detector << ',' << (r.mode == ProblemMode::jed ? "jed" : "coherent") << ','
           << r.b << ',' << r.u_or_k << ',' << r.modulation << ',' << r.arithmetic << ','
           << simdetail::format_double(r.alpha, 6) << ',' << r.t_max << ','
           << simdetail::format_double(r.snr_db, 6) << ',' << r.trials << ','
           << r.vector_errors << ',' << r.bit_errors << ','
           << simdetail::format_double(r.ver) << ',' << simdetail::format_double(r.ber) << ','
           << simdetail::format_double(r.ci_lo) << ',' << simdetail::format_double(r.ci_hi)
           << '\n';
    }
}

}  // namespace taser
