#include "translab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace translab::kernels {

namespace {
constexpr std::size_t kSumBlock = 4096;
}

Runtime& runtime() {
    static Runtime rt;
    return rt;
}

bool parallel_available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace serial {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * m;
        std::fill(crow, crow + m, 0.0);
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        double* darow = da + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
            darow[p] += acc;
        }
    }
}

void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t p = 0; p < k; ++p) {
        double* dbrow = db + p * m;
        for (std::size_t i = 0; i < n; ++i) {
            const double av = a[i * k + p];
            const double* grow = g + i * m;
            for (std::size_t j = 0; j < m; ++j) dbrow[j] += av * grow[j];
        }
    }
}

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * width;
        double* yr = y + r * width;
        double mx = xr[0];
        for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, xr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < width; ++j) yr[j] *= inv;
    }
}

double blocked_sum(const double* x, std::size_t n) {
    const std::size_t nblocks = (n + kSumBlock - 1) / kSumBlock;
    if (nblocks <= 1) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i];
        return acc;
    }
    std::vector<double> partial(nblocks, 0.0);
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t lo = blk * kSumBlock;
        const std::size_t hi = std::min(n, lo + kSumBlock);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += x[i];
        partial[blk] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace serial

namespace parallel {

// Each variant distributes the same outer loop the serial kernel runs; the
// per-output inner loops are identical, keeping results bitwise equal.

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        double* crow = c + ii * m;
        std::fill(crow, crow + m, 0.0);
        const double* arow = a + ii * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
#else
    serial::matmul_nn(a, b, c, n, k, m);
#endif
}

void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double* grow = g + ii * m;
        double* darow = da + ii * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
            darow[p] += acc;
        }
    }
#else
    serial::matmul_nt_acc(g, b, da, n, k, m);
#endif
}

void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m) {
#ifdef _OPENMP
    const long long kk = static_cast<long long>(k);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < kk; ++p) {
        const std::size_t pp = static_cast<std::size_t>(p);
        double* dbrow = db + pp * m;
        for (std::size_t i = 0; i < n; ++i) {
            const double av = a[i * k + pp];
            const double* grow = g + i * m;
            for (std::size_t j = 0; j < m; ++j) dbrow[j] += av * grow[j];
        }
    }
#else
    serial::matmul_tn_acc(a, g, db, n, k, m);
#endif
}

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width) {
#ifdef _OPENMP
    const long long rr = static_cast<long long>(rows);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < rr; ++r) {
        serial::softmax_rows(x + static_cast<std::size_t>(r) * width,
                             y + static_cast<std::size_t>(r) * width, 1, width);
    }
#else
    serial::softmax_rows(x, y, rows, width);
#endif
}

double blocked_sum(const double* x, std::size_t n) {
#ifdef _OPENMP
    const std::size_t nblocks = (n + kSumBlock - 1) / kSumBlock;
    if (nblocks <= 1) return serial::blocked_sum(x, n);
    std::vector<double> partial(nblocks, 0.0);
    const long long nb = static_cast<long long>(nblocks);
#pragma omp parallel for schedule(static)
    for (long long blk = 0; blk < nb; ++blk) {
        const std::size_t lo = static_cast<std::size_t>(blk) * kSumBlock;
        const std::size_t hi = std::min(n, lo + kSumBlock);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += x[i];
        partial[static_cast<std::size_t>(blk)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
#else
    return serial::blocked_sum(x, n);
#endif
}

}  // namespace parallel

namespace {
inline bool go_parallel(std::size_t work) {
    return parallel_available() && runtime().parallel && work >= runtime().grain;
}
}  // namespace

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t n, std::size_t k, std::size_t m) {
    if (go_parallel(n * k * m)) parallel::matmul_nn(a, b, c, n, k, m);
    else serial::matmul_nn(a, b, c, n, k, m);
}

void matmul_nt_acc(const double* g, const double* b, double* da,
                   std::size_t n, std::size_t k, std::size_t m) {
    if (go_parallel(n * k * m)) parallel::matmul_nt_acc(g, b, da, n, k, m);
    else serial::matmul_nt_acc(g, b, da, n, k, m);
}

void matmul_tn_acc(const double* a, const double* g, double* db,
                   std::size_t n, std::size_t k, std::size_t m) {
    if (go_parallel(n * k * m)) parallel::matmul_tn_acc(a, g, db, n, k, m);
    else serial::matmul_tn_acc(a, g, db, n, k, m);
}

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t width) {
    if (go_parallel(rows * width)) parallel::softmax_rows(x, y, rows, width);
    else serial::softmax_rows(x, y, rows, width);
}

double blocked_sum(const double* x, std::size_t n) {
    if (go_parallel(n)) return parallel::blocked_sum(x, n);
    return serial::blocked_sum(x, n);
}

}  // namespace translab::kernels
