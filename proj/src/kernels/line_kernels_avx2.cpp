// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.
#include "line_kernels_impl.hpp"

#if defined(NVSPEC_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <cmath>

namespace nvspec::kernels::detail {

namespace {

// exp(x) by Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, and a degree-13
// Taylor polynomial for e^r (truncation ~4e-18). Inputs below -708 return 0.
inline __m256d exp_pd(__m256d x) {
    const __m256d lower = _mm256_set1_pd(-708.0);
    const __m256d upper = _mm256_set1_pd(709.0);
    const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lower), upper);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(0.693145751953125), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i biased = _mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023));
    const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
    const __m256d result = _mm256_mul_pd(p, scale);

    const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
    return _mm256_andnot_pd(underflow, result);
}

}  // namespace

void gaussians_avx2(const double* grid, double* out, const LineInstance* lines, std::size_t count) {
    for (std::size_t n = 0; n < count; ++n) {
        const LineInstance& line = lines[n];
        const __m256d center = _mm256_set1_pd(line.center);
        const __m256d inv_width = _mm256_set1_pd(line.inv_width);
        const __m256d amplitude = _mm256_set1_pd(line.amplitude);
        std::size_t j = line.begin;
        for (; j + 4 <= line.end; j += 4) {
            const __m256d x = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(grid + j), center), inv_width);
            const __m256d g = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(x, x)));
            _mm256_storeu_pd(out + j, _mm256_fmadd_pd(amplitude, g, _mm256_loadu_pd(out + j)));
        }
        for (; j < line.end; ++j) {
            const double x = (grid[j] - line.center) * line.inv_width;
            out[j] += line.amplitude * std::exp(-x * x);
        }
    }
}

void lorentzians_avx2(const double* grid, double* out, const LineInstance* lines, std::size_t count) {
    const __m256d one = _mm256_set1_pd(1.0);
    for (std::size_t n = 0; n < count; ++n) {
        const LineInstance& line = lines[n];
        const __m256d center = _mm256_set1_pd(line.center);
        const __m256d inv_width = _mm256_set1_pd(line.inv_width);
        const __m256d amplitude = _mm256_set1_pd(line.amplitude);
        std::size_t j = line.begin;
        for (; j + 4 <= line.end; j += 4) {
            const __m256d x = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(grid + j), center), inv_width);
            const __m256d denom = _mm256_fmadd_pd(x, x, one);
            _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j),
                                                    _mm256_div_pd(amplitude, denom)));
        }
        for (; j < line.end; ++j) {
            const double x = (grid[j] - line.center) * line.inv_width;
            out[j] += line.amplitude / (1.0 + x * x);
        }
    }
}

void exp_avx2(const double* in, double* out, std::size_t n) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(out + j, exp_pd(_mm256_loadu_pd(in + j)));
    for (; j < n; ++j) out[j] = in[j] < -708.0 ? 0.0 : std::exp(in[j]);
}

}  // namespace nvspec::kernels::detail

#endif  // NVSPEC_HAVE_AVX2_KERNELS
