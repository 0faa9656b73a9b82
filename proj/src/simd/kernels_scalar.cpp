#include "bhsr/simd/kernels.hpp"

namespace bhsr::simd {

namespace {

ArgMax blend_max_scalar(const double* a, const double* b, double w, const double* lin, std::size_t n) {
    const double omw = 1.0 - w;
    ArgMax best{omw * a[0] + w * b[0] - lin[0], 0};
    for (std::size_t j = 1; j < n; ++j) {
        const double v = omw * a[j] + w * b[j] - lin[j];
        if (v > best.value) best = {v, j};
    }
    return best;
}

void hjb_row_scalar(const HjbRowInput& in, std::size_t n, const double* caa, const double* cbb, const double* cap,
                    const double* can, std::size_t n_controls, double dt, double* out, std::uint8_t* arg) {
    for (std::size_t k = 0; k < n; ++k) {
        const double px = in.dxx[k] - in.dx[k];
        const double py = in.dyy[k] - in.dy[k];
        const double qp = in.dxy_pos[k];
        const double qn = in.dxy_neg[k];
        double best = 0.5 * ((caa[0] * px + cbb[0] * py) + (cap[0] * qp + can[0] * qn));
        std::uint8_t best_m = 0;
        for (std::size_t m = 1; m < n_controls; ++m) {
            const double g = 0.5 * ((caa[m] * px + cbb[m] * py) + (cap[m] * qp + can[m] * qn));
            if (g > best) {
                best = g;
                best_m = static_cast<std::uint8_t>(m);
            }
        }
        out[k] = in.v[k] + dt * best;
        if (arg) arg[k] = best_m;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", &blend_max_scalar, &hjb_row_scalar};
    return table;
}

}  // namespace bhsr::simd
