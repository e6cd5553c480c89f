// Times the serial reference kernels against the OpenMP ones.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "translab/kernels.hpp"
#include "translab/rng.hpp"

using namespace translab;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        f();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

int main() {
    Rng rng(7);
    std::printf("threads available: %d (OpenMP %s)\n", kernels::max_threads(),
                kernels::parallel_available() ? "on" : "off");
    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial [ms]", "parallel [ms]", "speedup");

    for (std::size_t n : {128ul, 256ul, 512ul}) {
        auto a = random_vec(n * n, rng);
        auto b = random_vec(n * n, rng);
        std::vector<double> c(n * n);
        const double ts = time_best_of(3, [&] {
            kernels::serial::matmul_nn(a.data(), b.data(), c.data(), n, n, n);
        });
        const double tp = time_best_of(3, [&] {
            kernels::parallel::matmul_nn(a.data(), b.data(), c.data(), n, n, n);
        });
        std::printf("%-28s %12.3f %12.3f %8.2f\n",
                    ("matmul " + std::to_string(n) + "^3").c_str(), ts * 1e3, tp * 1e3,
                    ts / tp);
    }

    {
        const std::size_t rows = 1u << 16, width = 16;
        auto x = random_vec(rows * width, rng);
        std::vector<double> y(x.size());
        const double ts = time_best_of(5, [&] {
            kernels::serial::softmax_rows(x.data(), y.data(), rows, width);
        });
        const double tp = time_best_of(5, [&] {
            kernels::parallel::softmax_rows(x.data(), y.data(), rows, width);
        });
        std::printf("%-28s %12.3f %12.3f %8.2f\n", "softmax 65536x16", ts * 1e3, tp * 1e3,
                    ts / tp);
    }

    {
        const std::size_t n = 1u << 24;
        auto x = random_vec(n, rng);
        volatile double sink = 0.0;
        const double ts =
            time_best_of(5, [&] { sink = kernels::serial::blocked_sum(x.data(), n); });
        const double tp =
            time_best_of(5, [&] { sink = kernels::parallel::blocked_sum(x.data(), n); });
        (void)sink;
        std::printf("%-28s %12.3f %12.3f %8.2f\n", "blocked_sum 2^24", ts * 1e3, tp * 1e3,
                    ts / tp);
    }
    return 0;
}
