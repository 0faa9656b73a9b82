#include "bhsr/simd/kernels.hpp"

#if defined(BHSR_HAVE_AVX2_TU) && defined(__AVX2__)

#include <immintrin.h>

#include <cstdint>

namespace bhsr::simd {

namespace {

ArgMax blend_max_avx2(const double* a, const double* b, double w, const double* lin, std::size_t n) {
    const double omw = 1.0 - w;
    std::size_t j = 0;
    ArgMax best{omw * a[0] + w * b[0] - lin[0], 0};
    if (n >= 4) {
        const __m256d vomw = _mm256_set1_pd(omw);
        const __m256d vw = _mm256_set1_pd(w);
        __m256d vbest = _mm256_set1_pd(-__builtin_inf());
        __m256i vidx = _mm256_setzero_si256();
        __m256i cur = _mm256_setr_epi64x(0, 1, 2, 3);
        const __m256i step = _mm256_set1_epi64x(4);
        for (; j + 4 <= n; j += 4) {
            const __m256d v = _mm256_sub_pd(
                _mm256_add_pd(_mm256_mul_pd(vomw, _mm256_loadu_pd(a + j)), _mm256_mul_pd(vw, _mm256_loadu_pd(b + j))),
                _mm256_loadu_pd(lin + j));
            const __m256d gt = _mm256_cmp_pd(v, vbest, _CMP_GT_OQ);
            vbest = _mm256_blendv_pd(vbest, v, gt);
            vidx = _mm256_castpd_si256(
                _mm256_blendv_pd(_mm256_castsi256_pd(vidx), _mm256_castsi256_pd(cur), gt));
            cur = _mm256_add_epi64(cur, step);
        }
        alignas(32) double vals[4];
        alignas(32) std::int64_t idx[4];
        _mm256_store_pd(vals, vbest);
        _mm256_store_si256(reinterpret_cast<__m256i*>(idx), vidx);
        best = {vals[0], static_cast<std::size_t>(idx[0])};
        for (int l = 1; l < 4; ++l) {
            const auto il = static_cast<std::size_t>(idx[l]);
            if (vals[l] > best.value || (vals[l] == best.value && il < best.index)) best = {vals[l], il};
        }
    }
    for (; j < n; ++j) {
        const double v = omw * a[j] + w * b[j] - lin[j];
        if (v > best.value) best = {v, j};
    }
    return best;
}

void hjb_row_avx2(const HjbRowInput& in, std::size_t n, const double* caa, const double* cbb, const double* cap,
                  const double* can, std::size_t n_controls, double dt, double* out, std::uint8_t* arg) {
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d vdt = _mm256_set1_pd(dt);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d px = _mm256_sub_pd(_mm256_loadu_pd(in.dxx + k), _mm256_loadu_pd(in.dx + k));
        const __m256d py = _mm256_sub_pd(_mm256_loadu_pd(in.dyy + k), _mm256_loadu_pd(in.dy + k));
        const __m256d qp = _mm256_loadu_pd(in.dxy_pos + k);
        const __m256d qn = _mm256_loadu_pd(in.dxy_neg + k);
        auto gen = [&](std::size_t m) {
            const __m256d diag = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(caa[m]), px),
                                               _mm256_mul_pd(_mm256_set1_pd(cbb[m]), py));
            const __m256d cross = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(cap[m]), qp),
                                                _mm256_mul_pd(_mm256_set1_pd(can[m]), qn));
            return _mm256_mul_pd(half, _mm256_add_pd(diag, cross));
        };
        __m256d best = gen(0);
        __m256d best_m = _mm256_setzero_pd();
        for (std::size_t m = 1; m < n_controls; ++m) {
            const __m256d g = gen(m);
            const __m256d gt = _mm256_cmp_pd(g, best, _CMP_GT_OQ);
            best = _mm256_blendv_pd(best, g, gt);
            best_m = _mm256_blendv_pd(best_m, _mm256_set1_pd(static_cast<double>(m)), gt);
        }
        _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(in.v + k), _mm256_mul_pd(vdt, best)));
        if (arg) {
            alignas(32) double ms[4];
            _mm256_store_pd(ms, best_m);
            for (int l = 0; l < 4; ++l) arg[k + static_cast<std::size_t>(l)] = static_cast<std::uint8_t>(ms[l]);
        }
    }
    if (k < n) {
        const HjbRowInput tail{in.v + k,       in.dxx + k, in.dyy + k, in.dxy_pos + k,
                               in.dxy_neg + k, in.dx + k,  in.dy + k};
        scalar_kernels().hjb_row(tail, n - k, caa, cbb, cap, can, n_controls, dt, out + k, arg ? arg + k : nullptr);
    }
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{"avx2", &blend_max_avx2, &hjb_row_avx2};
    return &table;
}

}  // namespace bhsr::simd

#else

namespace bhsr::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace bhsr::simd

#endif
