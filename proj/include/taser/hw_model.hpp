#pragma once

// Analytical cost model of the triangular systolic array. One iteration
// takes N cycles to finish V, one more for the last squared column norm,
// two for the scale unit (inverse square root and D_jj multiply), one to
// broadcast the scale factor and one to apply it: N + 5 cycles, plus two
// penalty cycles from the stage registers in the broadcast units. Real
// multiplication counts follow the array's dataflow: tril-product MACs,
// norm squarings, one D*invsqrt multiply per column and the rescale
// multiplies.

#include <cstdint>

#include "taser/errors.hpp"

namespace taser {

struct ArrayGeometry {
    int n_dim = 0;
    int pe_count = 0;

    static ArrayGeometry for_dim(int n) {
        return {n, n * (n + 1) / 2};
    }
};

struct CostReport {
    long long cycles_per_iteration = 0;
    long long total_latency_cycles = 0;
    long long real_multiplications = 0;
    int t_max = 0;
};

// Multiplies per run: t_max * (N^3/3 + 3N^2/2 + 13N/6), assembled from the
// integer-valued parts sum(i^2) + N(N+1) + N so the result is exact.
inline long long mult_count(int n_dim, int t_max) {
    if (n_dim < 2) throw DomainError("array dimension must be at least 2");
    const long long n = n_dim;
    const long long per_iter = n * (n + 1) * (2 * n + 1) / 6  // tril-product MACs
                               + n * (n + 1) / 2              // norm squarings
                               + n                            // D * invsqrt
                               + n * (n + 1) / 2;             // column rescale
    return static_cast<long long>(t_max) * per_iter;
}

inline CostReport cycle_model(int n_dim, int t_max) {
    if (n_dim < 2) throw DomainError("array dimension must be at least 2");
    if (t_max < 1) throw DomainError("t_max must be at least 1");
    CostReport r;
    r.cycles_per_iteration = n_dim + 7;
    r.total_latency_cycles = static_cast<long long>(t_max) * r.cycles_per_iteration;
    r.real_multiplications = mult_count(n_dim, t_max);
    r.t_max = t_max;
    return r;
}

inline double throughput_bps(int n_dim, int t_max, double clock_hz, int bits_per_vector) {
    if (clock_hz <= 0.0 || bits_per_vector < 1) {
        throw DomainError("clock rate and bits per vector must be positive");
    }
    const CostReport r = cycle_model(n_dim, t_max);
    return static_cast<double>(bits_per_vector) * clock_hz /
           static_cast<double>(r.total_latency_cycles);
}

}  // namespace taser
