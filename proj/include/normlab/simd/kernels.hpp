#pragma once

// Data-parallel inner loops used by the tensor and layer code.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA implementation compiled in its own translation unit. The active
// table is chosen once at startup from the CPU capabilities and can be forced
// with NORMLAB_SIMD=scalar|avx2 or set_active_isa().
//
// All kernels work on double precision and use a fixed summation order, so a
// given table is bit-deterministic for a given input. The scalar and AVX2
// tables agree to rounding error, not bit-for-bit.

#include <cstddef>
#include <string_view>

namespace normlab::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;

    // sum_i x[i]
    double (*sum)(const double *x, std::size_t n);
    // sum_i (x[i] - mean)^2
    double (*sum_sq_dev)(const double *x, std::size_t n, double mean);
    // sum_i a[i] * b[i]
    double (*dot)(const double *a, const double *b, std::size_t n);
    // sum_i (a[i] - b[i])^2
    double (*sum_sq_diff)(const double *a, const double *b, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
    // out[i] = x[i] * scale + shift   (out may alias x)
    void (*scale_shift)(const double *x, double scale, double shift,
                        double *out, std::size_t n);
    // out[i] = a * u[i] + b * v[i] + c   (out may alias u or v)
    void (*lincomb2)(double a, const double *u, double b, const double *v,
                     double c, double *out, std::size_t n);

    // C[i, j] += sum_k A(i, k) * B[k * ldb + j]
    // A(i, k) = a[i * a_row + k * a_col]; lets the same kernel serve A and A^T.
    void (*gemm_acc)(std::size_t m, std::size_t n, std::size_t k,
                     const double *a, std::size_t a_row, std::size_t a_col,
                     const double *b, std::size_t ldb, double *c,
                     std::size_t ldc);
    // C[i, j] += sum_k A[i * lda + k] * B[j * ldb + k]    (C += A * B^T)
    void (*gemm_nt_acc)(std::size_t m, std::size_t n, std::size_t k,
                        const double *a, std::size_t lda, const double *b,
                        std::size_t ldb, double *c, std::size_t ldc);
};

const KernelTable &scalar_kernels();

// Null when the build or the CPU lacks AVX2/FMA.
const KernelTable *avx2_kernels();

bool isa_available(Isa isa);

// The table the library currently dispatches to.
const KernelTable &active();

// Throws normlab::ConfigError if the ISA is unavailable.
void set_active_isa(Isa isa);

} // namespace normlab::simd
