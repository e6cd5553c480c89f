#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fd_oracle.hpp"
#include "translab/errors.hpp"
#include "translab/params.hpp"
#include "translab/rng.hpp"
#include "translab/tensor.hpp"

using namespace translab;

namespace {

Tensor random_variable(std::vector<std::size_t> shape, std::uint64_t seed,
                       double lo = -2.0, double hi = 2.0) {
    Rng rng(seed);
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::variable(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("matmul identity and forced arithmetic") {
    Tensor eye = Tensor::constant({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::constant({2, 2}, {3, -1, 2, 5});
    CHECK(matmul(eye, a).values() == a.values());

    Tensor b = Tensor::constant({2, 2}, {1, 2, 3, 4});
    Tensor c = Tensor::constant({2, 1}, {0, 1});
    Tensor prod = matmul(b, c);
    CHECK(prod.values() == std::vector<double>{2, 4});
}

TEST_CASE("matmul shape errors name both shapes") {
    Tensor a = Tensor::constant({2, 3}, std::vector<double>(6, 0.0));
    Tensor b = Tensor::constant({4, 2}, std::vector<double>(8, 0.0));
    CHECK_THROWS_WITH_AS(matmul(a, b),
                         "matmul: inner extents disagree, [2 x 3] vs [4 x 2]",
                         dimension_error);
}

TEST_CASE("matmul backward matches finite differences") {
    Tensor a = random_variable({3, 4}, 11);
    Tensor b = random_variable({4, 2}, 12);
    Tensor w = Tensor::constant({3, 2}, random_variable({3, 2}, 13).values());

    auto loss_fn = [&]() { return sum(mul(matmul(a, b), w)).item(); };
    a.zero_grad();
    b.zero_grad();
    backward(sum(mul(matmul(a, b), w)));

    auto res_a = fd::check_leaf(a, loss_fn, [&](std::size_t i) { return a.grad()[i]; });
    auto res_b = fd::check_leaf(b, loss_fn, [&](std::size_t i) { return b.grad()[i]; });
    CHECK(res_a.max_rel_err < fd::kTol);
    CHECK(res_b.max_rel_err < fd::kTol);
}

TEST_CASE("softmax symmetry and large-logit stability") {
    Tensor z = Tensor::constant({3}, {0, 0, 0});
    Tensor uniform = softmax(reshape(z, {1, 3}), 1);
    for (double v : uniform.values())
        CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Tensor big = Tensor::constant({1, 2}, {1000, 0});
    auto p = softmax(big, 1).values();
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);

    Tensor huge = random_variable({5, 7}, 21, -1e3, 1e3);
    auto q = softmax(huge, 1).values();
    for (std::size_t r = 0; r < 5; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(q[r * 7 + j] >= 0.0);
            s += q[r * 7 + j];
        }
        CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("softmax rejects non-finite input") {
    Tensor bad = Tensor::constant({1, 2}, {std::nan(""), 0.0});
    CHECK_THROWS_AS(softmax(bad, 1), input_error);
}

TEST_CASE("softmax gradient matches finite differences") {
    Tensor z = random_variable({1, 5}, 31);
    Tensor r = Tensor::constant({1, 5}, random_variable({1, 5}, 32).values());
    auto loss_fn = [&]() { return sum(mul(softmax(z, 1), r)).item(); };
    backward(sum(mul(softmax(z, 1), r)));
    auto res = fd::check_leaf(z, loss_fn, [&](std::size_t i) { return z.grad()[i]; });
    CHECK(res.max_rel_err < fd::kTol);
}

TEST_CASE("cross entropy values") {
    Tensor p = Tensor::constant({3}, {0, 1, 0});
    Tensor y = Tensor::constant({3}, {0, 1, 0});
    CHECK(std::fabs(cross_entropy(p, y).item()) <= 1e-11);

    Tensor half = Tensor::constant({2}, {0.5, 0.5});
    Tensor e1 = Tensor::constant({2}, {1, 0});
    CHECK(cross_entropy(half, e1).item() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("cross entropy rejects malformed one-hot") {
    Tensor p = Tensor::constant({3}, {0.2, 0.5, 0.3});
    CHECK_THROWS_AS(cross_entropy(p, Tensor::constant({3}, {1, 1, 0})), input_error);
    CHECK_THROWS_AS(cross_entropy(p, Tensor::constant({3}, {0, 0.5, 0.5})), input_error);
    CHECK_THROWS_AS(cross_entropy(p, Tensor::constant({3}, {0, 0, 0})), input_error);
}

TEST_CASE("cross entropy gradient wrt p matches finite differences") {
    Rng rng(41);
    std::vector<double> pv(4);
    double s = 0.0;
    for (double& v : pv) {
        v = rng.uniform(0.05, 1.0);
        s += v;
    }
    for (double& v : pv) v /= s;
    Tensor p = Tensor::variable({4}, pv);
    Tensor y = Tensor::constant({4}, one_hot(2, 4));
    auto loss_fn = [&]() { return cross_entropy(p, y).item(); };
    backward(cross_entropy(p, y));
    auto res = fd::check_leaf(p, loss_fn, [&](std::size_t i) { return p.grad()[i]; });
    CHECK(res.max_rel_err < fd::kTol);
}

TEST_CASE("backward basics: sum gives ones, sum of squares gives 2x") {
    Tensor x = random_variable({6}, 51);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);

    Tensor x2 = random_variable({6}, 52);
    backward(sum(mul(x2, x2)));
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(x2.grad()[i] == doctest::Approx(2.0 * x2.values()[i]).epsilon(1e-15));
}

TEST_CASE("gradient accumulation across shared use: f(x) = x + x") {
    Tensor x = random_variable({4}, 53);
    backward(sum(add(x, x)));
    for (double g : x.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    Tensor x = random_variable({3}, 54);
    CHECK_THROWS_AS(backward(add(x, x)), usage_error);
}

TEST_CASE("elementwise and reduction gradients match finite differences") {
    Tensor x = random_variable({2, 3}, 61);
    Tensor y = random_variable({2, 3}, 62);

    auto build = [&]() {
        Tensor a = mul(relu(x), y);
        Tensor b = sub(a, scale(x, 0.25));
        Tensor c = add(b, y);
        Tensor d = reshape(c, {6});
        Tensor shifted = add(d, Tensor::constant({6}, std::vector<double>(6, 3.0)));
        return add(mean(d), sum(log_guarded(shifted)));
    };
    backward(build());
    auto loss_fn = [&]() { return build().item(); };
    auto rx = fd::check_leaf(x, loss_fn, [&](std::size_t i) { return x.grad()[i]; });
    auto ry = fd::check_leaf(y, loss_fn, [&](std::size_t i) { return y.grad()[i]; });
    CHECK(rx.max_rel_err < fd::kTol);
    CHECK(ry.max_rel_err < fd::kTol);
}

TEST_CASE("posterior_compose, row_select and mse gradients match finite differences") {
    Tensor p = random_variable({2, 3}, 71, 0.1, 1.0);
    Tensor t = random_variable({2, 3, 3}, 72, 0.1, 1.0);
    auto build = [&]() {
        Tensor out = posterior_compose(p, t);
        Tensor target = Tensor::constant({2, 3}, std::vector<double>(6, 0.3));
        return mse(out, target);
    };
    backward(build());
    auto loss_fn = [&]() { return build().item(); };
    auto rp = fd::check_leaf(p, loss_fn, [&](std::size_t i) { return p.grad()[i]; });
    auto rt = fd::check_leaf(t, loss_fn, [&](std::size_t i) { return t.grad()[i]; });
    CHECK(rp.max_rel_err < fd::kTol);
    CHECK(rt.max_rel_err < fd::kTol);

    Tensor tm = random_variable({4, 4}, 73, 0.05, 1.0);
    Tensor y = Tensor::constant({4}, one_hot(2, 4));
    auto build2 = [&]() { return cross_entropy(row_select(y, tm), Tensor::constant({4}, one_hot(1, 4))); };
    tm.zero_grad();
    backward(build2());
    auto loss2 = [&]() { return build2().item(); };
    auto rtm = fd::check_leaf(tm, loss2, [&](std::size_t i) { return tm.grad()[i]; });
    CHECK(rtm.max_rel_err < fd::kTol);
}

TEST_CASE("detach blocks gradient flow") {
    Tensor x = random_variable({3}, 81);
    Tensor d = detach(scale(x, 2.0));
    CHECK_FALSE(d.requires_grad());
    backward(sum(add(x, d)));
    for (double g : x.grad()) CHECK(g == 1.0);  // only the direct path
}

TEST_CASE("full MLP pipeline gradients match finite differences") {
    // two-layer net with softmax + cross entropy on top
    Tensor w0 = random_variable({3, 8}, 91, -0.8, 0.8);
    Tensor b0 = random_variable({8}, 92, -0.5, 0.5);
    Tensor w1 = random_variable({8, 4}, 93, -0.8, 0.8);
    Tensor b1 = random_variable({4}, 94, -0.5, 0.5);
    Tensor x = random_variable({5, 3}, 95, 0.0, 1.0);
    std::vector<int> labels{0, 1, 2, 3, 1};

    auto build = [&]() {
        Tensor h = relu(add_rowvec(matmul(x, w0), b0));
        Tensor logits = add_rowvec(matmul(h, w1), b1);
        return cross_entropy_mean(softmax(logits, 1), labels);
    };
    backward(build());
    auto loss_fn = [&]() { return build().item(); };
    for (Tensor* t : {&w0, &b0, &w1, &b1, &x}) {
        auto res = fd::check_leaf(*t, loss_fn, [&](std::size_t i) { return t->grad()[i]; });
        CHECK_MESSAGE(res.max_rel_err < fd::kTol, res.worst);
    }
}

TEST_CASE("forward+backward is bitwise deterministic") {
    auto run = [](std::uint64_t seed) {
        Tensor w = random_variable({4, 4}, seed);
        Tensor x = random_variable({2, 4}, seed + 1);
        Tensor loss = cross_entropy_mean(softmax(matmul(x, w), 1), {1, 2});
        backward(loss);
        return std::pair{loss.item(), w.grad()};
    };
    auto [l1, g1] = run(7);
    auto [l2, g2] = run(7);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("sgd_step basic contracts") {
    ParameterSet params;
    params.insert("w", Tensor::variable({2}, {1.0, -2.0}));

    SUBCASE("momentum 0, lr 1 decreases by exactly the gradient") {
        auto& t = params.at("w");
        t.node()->grad = {0.25, -0.5};
        sgd_step(params, 1.0, 0.0);
        CHECK(t.values() == std::vector<double>{0.75, -1.5});
        CHECK(t.grad() == std::vector<double>{0.0, 0.0});  // zeroed after step
    }

    SUBCASE("momentum 0.9, two identical unit-lr steps decrease by g + 1.9g") {
        auto& t = params.at("w");
        const std::vector<double> g{0.1, 0.2};
        t.node()->grad = g;
        sgd_step(params, 1.0, 0.9);
        t.node()->grad = g;
        sgd_step(params, 1.0, 0.9);
        CHECK(t.values()[0] == doctest::Approx(1.0 - 2.9 * 0.1).epsilon(1e-15));
        CHECK(t.values()[1] == doctest::Approx(-2.0 - 2.9 * 0.2).epsilon(1e-15));
    }

    SUBCASE("missing gradient raises a state error naming the parameter") {
        ParameterSet fresh;
        Tensor t = Tensor::variable({2}, {0.0, 0.0});
        fresh.insert("hidden_w", t);
        t.node()->grad.clear();
        CHECK_THROWS_WITH_AS(sgd_step(fresh, 0.1, 0.9),
                             "sgd_step: gradient missing for parameter 'hidden_w'",
                             state_error);
    }
}

TEST_CASE("sgd reaches the minimizer of a convex quadratic") {
    // f(w) = 0.5 * sum_i a_i (w_i - c_i)^2, minimizer w = c
    const std::vector<double> a{1.0, 2.0, 0.5, 3.0};
    const std::vector<double> c{0.3, -1.2, 2.0, 0.7};
    ParameterSet params;
    params.insert("w", Tensor::zeros({4}, true));
    Tensor& w = params.at("w");
    for (int step = 0; step < 200; ++step) {
        auto& grad = w.node()->grad;
        for (std::size_t i = 0; i < 4; ++i) grad[i] = a[i] * (w.values()[i] - c[i]);
        sgd_step(params, 0.3, 0.5);
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(w.values()[i] - c[i]) < 1e-6);
}

TEST_CASE("parameter names are unique and stable") {
    ParameterSet params;
    params.insert("b", Tensor::zeros({1}, true));
    params.insert("a", Tensor::zeros({1}, true));
    CHECK(params.names() == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(params.insert("a", Tensor::zeros({1}, true)), usage_error);
}
