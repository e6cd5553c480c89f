#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace translab::kernels {

// Runtime switch between the serial reference kernels and the OpenMP ones.
// Both produce bitwise-identical results: parallel variants only distribute
// an outer loop whose iterations own disjoint outputs, and reductions use a
// fixed block order independent of thread count.
struct Runtime {
    bool parallel = true;
    std::size_t grain = 1u << 15;  // min work units before going parallel
};

Runtime& runtime();

bool parallel_available();
int max_threads();

namespace serial {
// c[n x m] = a[n x k] * b[k x m]
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m);
// da[n x k] += g[n x m] * b[k x m]^T
void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m);
// db[k x m] += a[n x k]^T * g[n x m]
void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m);
// row-wise softmax with max subtraction over the last axis
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width);
// fixed-block-order sum (order independent of threading)
double blocked_sum(const double* x, std::size_t n);
}  // namespace serial

namespace parallel {
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m);
void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m);
void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m);
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width);
double blocked_sum(const double* x, std::size_t n);
}  // namespace parallel

// Dispatching entry points used by the tensor ops.
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m);
void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m);
void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m);
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width);
double blocked_sum(const double* x, std::size_t n);

// Elementwise map: out[i] depends only on index i, so distribution over i is
// bitwise-neutral.
template <class F>
void map_n(std::size_t n, F&& f) {
#ifdef _OPENMP
    if (runtime().parallel && n >= runtime().grain) {
        const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < nn; ++i) f(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace translab::kernels
