#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bhsr::simd {

struct ArgMax {
    double value;
    std::size_t index;
};

/// max over j < n of (1-w)*a[j] + w*b[j] - lin[j], first index on ties.
/// Used for the discrete conjugate: a, b are two neighbouring envelope fibers
/// and lin[j] = delta . sc_j. Requires n >= 1.
using BlendMaxFn = ArgMax (*)(const double* a, const double* b, double w, const double* lin, std::size_t n);

/// One row of the explicit HJB update in log coordinates. For each node k,
///   out[k] = v[k] + dt * max_m 0.5*((caa[m]*(dxx[k]-dx[k]) + cbb[m]*(dyy[k]-dy[k]))
///                                   + (cap[m]*dxy_pos[k] + can[m]*dxy_neg[k]))
/// and arg[k] is the first maximizing control index. dxy_pos / dxy_neg are the
/// seven-point cross stencils for positive / negative correlation, and
/// cap = max(cab, 0), can = min(cab, 0).
struct HjbRowInput {
    const double* v;
    const double* dxx;
    const double* dyy;
    const double* dxy_pos;
    const double* dxy_neg;
    const double* dx;
    const double* dy;
};
using HjbRowFn = void (*)(const HjbRowInput& in, std::size_t n, const double* caa, const double* cbb,
                          const double* cap, const double* can, std::size_t n_controls, double dt, double* out,
                          std::uint8_t* arg);

struct KernelTable {
    const char* name;
    BlendMaxFn blend_max;
    HjbRowFn hjb_row;
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 translation unit was not built for this target.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

/// Table chosen at first use: AVX2 when compiled in and supported by the CPU,
/// unless the BHSR_SIMD environment variable says "scalar".
const KernelTable& active();

/// Overrides the runtime choice: "scalar", "avx2" or "auto". Returns false if
/// the requested table is unavailable (the selection is then unchanged).
bool select(std::string_view name);

}  // namespace bhsr::simd
