#include "normlab/simd/kernels.hpp"

namespace normlab::simd {
namespace {

double sum(const double *x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double *x, std::size_t n, double mean) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        s += d * d;
    }
    return s;
}

double dot(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_diff(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_shift(const double *x, double scale, double shift, double *out,
                 std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * scale + shift;
}

void lincomb2(double a, const double *u, double b, const double *v, double c,
              double *out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * u[i] + b * v[i] + c;
}

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double *a,
              std::size_t a_row, std::size_t a_col, const double *b,
              std::size_t ldb, double *c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double *crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * a_row + p * a_col];
            const double *brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
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

const KernelTable &scalar_kernels() {
    static const KernelTable table{
        Isa::Scalar, sum,         sum_sq_dev, dot,      sum_sq_diff,
        axpy,        scale_shift, lincomb2,   gemm_acc, gemm_nt_acc,
    };
    return table;
}

} // namespace normlab::simd
