// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.

#include "normlab/simd/kernels.hpp"

#include <immintrin.h>

namespace normlab::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum(const double *x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    if (i + 4 <= n) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double *x, std::size_t n, double mean) {
    const __m256d m = _mm256_set1_pd(mean);
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), m);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    if (i + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        s += d * d;
    }
    return s;
}

double dot(const double *a, const double *b, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                             _mm256_loadu_pd(b + i + 4), a1);
    }
    if (i + 4 <= n) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_diff(const double *a, const double *b, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        a0 = _mm256_fmadd_pd(d, d, a0);
    }
    double s = hsum(a0);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
    const __m256d al = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(al, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_shift(const double *x, double scale, double shift, double *out,
                 std::size_t n) {
    const __m256d sc = _mm256_set1_pd(scale);
    const __m256d sh = _mm256_set1_pd(shift);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_fmadd_pd(_mm256_loadu_pd(x + i), sc, sh));
    for (; i < n; ++i) out[i] = x[i] * scale + shift;
}

void lincomb2(double a, const double *u, double b, const double *v, double c,
              double *out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_fmadd_pd(vb, _mm256_loadu_pd(v + i), vc);
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(u + i), t));
    }
    for (; i < n; ++i) out[i] = a * u[i] + b * v[i] + c;
}

// 4x8 register block: 8 accumulators, two B loads and four broadcasts per k.
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double *a,
              std::size_t a_row, std::size_t a_col, const double *b,
              std::size_t ldb, double *c, std::size_t ldc) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const double *a0 = a + (i + 0) * a_row;
        const double *a1 = a + (i + 1) * a_row;
        const double *a2 = a + (i + 2) * a_row;
        const double *a3 = a + (i + 3) * a_row;
        double *c0 = c + (i + 0) * ldc;
        double *c1 = c + (i + 1) * ldc;
        double *c2 = c + (i + 2) * ldc;
        double *c3 = c + (i + 3) * ldc;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d r00 = _mm256_loadu_pd(c0 + j), r01 = _mm256_loadu_pd(c0 + j + 4);
            __m256d r10 = _mm256_loadu_pd(c1 + j), r11 = _mm256_loadu_pd(c1 + j + 4);
            __m256d r20 = _mm256_loadu_pd(c2 + j), r21 = _mm256_loadu_pd(c2 + j + 4);
            __m256d r30 = _mm256_loadu_pd(c3 + j), r31 = _mm256_loadu_pd(c3 + j + 4);
            for (std::size_t p = 0; p < k; ++p) {
                const double *bp = b + p * ldb + j;
                const __m256d b0 = _mm256_loadu_pd(bp);
                const __m256d b1 = _mm256_loadu_pd(bp + 4);
                const std::size_t off = p * a_col;
                __m256d s = _mm256_broadcast_sd(a0 + off);
                r00 = _mm256_fmadd_pd(s, b0, r00);
                r01 = _mm256_fmadd_pd(s, b1, r01);
                s = _mm256_broadcast_sd(a1 + off);
                r10 = _mm256_fmadd_pd(s, b0, r10);
                r11 = _mm256_fmadd_pd(s, b1, r11);
                s = _mm256_broadcast_sd(a2 + off);
                r20 = _mm256_fmadd_pd(s, b0, r20);
                r21 = _mm256_fmadd_pd(s, b1, r21);
                s = _mm256_broadcast_sd(a3 + off);
                r30 = _mm256_fmadd_pd(s, b0, r30);
                r31 = _mm256_fmadd_pd(s, b1, r31);
            }
            _mm256_storeu_pd(c0 + j, r00); _mm256_storeu_pd(c0 + j + 4, r01);
            _mm256_storeu_pd(c1 + j, r10); _mm256_storeu_pd(c1 + j + 4, r11);
            _mm256_storeu_pd(c2 + j, r20); _mm256_storeu_pd(c2 + j + 4, r21);
            _mm256_storeu_pd(c3 + j, r30); _mm256_storeu_pd(c3 + j + 4, r31);
        }
        for (; j < n; ++j) {
            double s0 = c0[j], s1 = c1[j], s2 = c2[j], s3 = c3[j];
            for (std::size_t p = 0; p < k; ++p) {
                const double bv = b[p * ldb + j];
                const std::size_t off = p * a_col;
                s0 += a0[off] * bv;
                s1 += a1[off] * bv;
                s2 += a2[off] * bv;
                s3 += a3[off] * bv;
            }
            c0[j] = s0; c1[j] = s1; c2[j] = s2; c3[j] = s3;
        }
    }
    for (; i < m; ++i) {
        double *crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p)
            axpy(a[i * a_row + p * a_col], b + p * ldb, crow, n);
    }
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, const double *a,
                 std::size_t lda, const double *b, std::size_t ldb, double *c,
                 std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            c[i * ldc + j] += dot(a + i * lda, b + j * ldb, k);
}

} // namespace

const KernelTable &avx2_table() {
    static const KernelTable table{
        Isa::Avx2,   sum,         sum_sq_dev, dot,      sum_sq_diff,
        axpy,        scale_shift, lincomb2,   gemm_acc, gemm_nt_acc,
    };
    return table;
}

} // namespace normlab::simd
