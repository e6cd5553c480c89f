#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "translab/kernels.hpp"
#include "translab/rng.hpp"

using namespace translab;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

}  // namespace

TEST_CASE("matmul_nn serial and parallel agree bitwise") {
    for (auto [n, k, m] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                           {3, 5, 7},
                           {17, 33, 9},
                           {64, 64, 64},
                           {129, 65, 31}}) {
        auto a = random_vec(n * k, 100 + n);
        auto b = random_vec(k * m, 200 + m);
        std::vector<double> cs(n * m), cp(n * m);
        kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), n, k, m);
        kernels::parallel::matmul_nn(a.data(), b.data(), cp.data(), n, k, m);
        CHECK(cs == cp);
    }
}

TEST_CASE("matmul accumulate variants agree bitwise with serial reference") {
    const std::size_t n = 23, k = 17, m = 11;
    auto g = random_vec(n * m, 1);
    auto b = random_vec(k * m, 2);
    auto a = random_vec(n * k, 3);
    std::vector<double> da_s = random_vec(n * k, 4), da_p = da_s;
    kernels::serial::matmul_nt_acc(g.data(), b.data(), da_s.data(), n, k, m);
    kernels::parallel::matmul_nt_acc(g.data(), b.data(), da_p.data(), n, k, m);
    CHECK(da_s == da_p);

    std::vector<double> db_s = random_vec(k * m, 5), db_p = db_s;
    kernels::serial::matmul_tn_acc(a.data(), g.data(), db_s.data(), n, k, m);
    kernels::parallel::matmul_tn_acc(a.data(), g.data(), db_p.data(), n, k, m);
    CHECK(db_s == db_p);
}

TEST_CASE("softmax_rows serial/parallel parity and row sums") {
    const std::size_t rows = 513, width = 16;
    auto x = random_vec(rows * width, 9);
    std::vector<double> ys(x.size()), yp(x.size());
    kernels::serial::softmax_rows(x.data(), ys.data(), rows, width);
    kernels::parallel::softmax_rows(x.data(), yp.data(), rows, width);
    CHECK(ys == yp);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < width; ++j) s += ys[r * width + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("blocked_sum is thread-count independent") {
    for (std::size_t n : {std::size_t{1}, std::size_t{4095}, std::size_t{4096},
                          std::size_t{4097}, std::size_t{1u << 18}}) {
        auto x = random_vec(n, 42 + n);
        CHECK(kernels::serial::blocked_sum(x.data(), n) ==
              kernels::parallel::blocked_sum(x.data(), n));
    }
}

TEST_CASE("dispatch honors the runtime switch") {
    auto& rt = kernels::runtime();
    const bool keep = rt.parallel;
    const std::size_t n = 65, k = 65, m = 65;
    auto a = random_vec(n * k, 6);
    auto b = random_vec(k * m, 7);
    std::vector<double> c_on(n * m), c_off(n * m);
    rt.parallel = true;
    kernels::matmul_nn(a.data(), b.data(), c_on.data(), n, k, m);
    rt.parallel = false;
    kernels::matmul_nn(a.data(), b.data(), c_off.data(), n, k, m);
    rt.parallel = keep;
    CHECK(c_on == c_off);
}
