#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "translab/dataset.hpp"
#include "translab/errors.hpp"
#include "translab/nn.hpp"
#include "translab/rng.hpp"
#include "translab/train.hpp"

using namespace translab;

namespace {

AttackConfig training_attack(double eps, AttackObjective obj = AttackObjective::Combined) {
    AttackConfig cfg;
    cfg.epsilon = eps;
    cfg.steps = 10;
    cfg.step_size = eps > 0 ? eps / 4 : 0.01;
    cfg.random_start = true;
    cfg.objective = obj;
    return cfg;
}

std::vector<double> snapshot(const ParameterSet& params) {
    std::vector<double> out;
    params.for_each([&](const std::string&, const Tensor& t, const std::vector<double>&) {
        out.insert(out.end(), t.values().begin(), t.values().end());
    });
    return out;
}

// separates two point classes at x=0.25 and x=0.75 with saturated logits,
// so the softmax is exactly one-hot in double precision
TargetClassifier perfect_model(Rng& init) {
    TargetClassifier model(2, {}, 2, init);
    model.params().at("w0").values_mut() = {-400.0, 400.0, 0.0, 0.0};
    model.params().at("b0").values_mut() = {200.0, -200.0};
    return model;
}

DataPair two_point_data() {
    DataPair d;
    for (Dataset* ds : {&d.train, &d.test}) {
        ds->classes = 2;
        ds->dim = 2;
        ds->features = {0.25, 0.5, 0.75, 0.5, 0.2, 0.4, 0.8, 0.6};
        ds->labels = {0, 1, 0, 1};
    }
    d.test.split = Split::Test;
    return d;
}

std::vector<MixtureTriplet> simple_triplets() {
    std::vector<MixtureTriplet> t(3);
    t[0] = {{0.2, 0.3}, 0, 0, Provenance::Natural};
    t[1] = {{0.6, 0.1}, 1, 1, Provenance::Natural};
    t[2] = {{0.8, 0.9}, 1, 0, Provenance::Adversarial};
    return t;
}

}  // namespace

TEST_CASE("mixture batch: zero budget duplicates the batch with natural labels") {
    Rng init(1);
    TargetClassifier model = perfect_model(init);
    DataPair d = two_point_data();
    Tensor x = d.train.all_rows_tensor();
    Rng rng(2);
    auto triplets = build_mixture_batch(
        x, d.train.labels, model, nullptr,
        training_attack(0.0, AttackObjective::TargetOnly), rng);
    REQUIRE(triplets.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto& t = triplets[i];
        CHECK(t.mixture_label == t.natural_label);
        CHECK(t.provenance == (i < 4 ? Provenance::Natural : Provenance::Adversarial));
        const double* row = d.train.row(i % 4);
        CHECK(t.x == std::vector<double>{row[0], row[1]});
    }
}

TEST_CASE("mixture batch: naturals first, two triplets per instance, box respected") {
    Rng init(3);
    TargetClassifier target(2, {8}, 3, init);
    TransitionNetwork trans(2, {8}, 3, init);
    DataPair d = gen_blobs(3, 2, 20, 0.05, 4);
    Tensor x = d.train.rows_tensor({0, 1, 2, 3, 4});
    std::vector<int> y = d.train.labels_at({0, 1, 2, 3, 4});
    Rng rng(5);
    auto triplets = build_mixture_batch(x, y, target, &trans, training_attack(0.1), rng);
    REQUIRE(triplets.size() == 10);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(triplets[i].provenance == Provenance::Natural);
        CHECK(triplets[i].mixture_label == y[i]);
        CHECK(triplets[i].natural_label == y[i]);
        CHECK(triplets[5 + i].provenance == Provenance::Adversarial);
        CHECK(triplets[5 + i].natural_label == y[i]);
        for (double v : triplets[5 + i].x) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("mixture batch: attacks on an undefended model flip most labels") {
    DataPair d = gen_blobs(4, 2, 100, 0.2, 6);
    Rng init(7);
    TargetClassifier target(2, {32, 32}, 4, init);
    train_natural(target, d, 25, 0.1, 0.9, 2e-4, {0.75, 0.9}, 64, 8);
    Tensor x = d.train.all_rows_tensor();
    Rng rng(9);
    auto triplets = build_mixture_batch(x, d.train.labels, target, nullptr,
                                        training_attack(0.3, AttackObjective::TargetOnly), rng);
    const std::size_t m = d.train.size();
    std::size_t flipped = 0;
    for (std::size_t i = m; i < 2 * m; ++i)
        flipped += triplets[i].mixture_label != triplets[i].natural_label;
    CHECK(static_cast<double>(flipped) / m >= 0.9);
}

TEST_CASE("transition loss: forced arithmetic and the near-identity limit") {
    Rng init(11);
    TransitionNetwork trans(2, {4}, 2, init);
    auto& w = trans.params().at("w1").values_mut();
    auto& b = trans.params().at("b1").values_mut();
    std::fill(w.begin(), w.end(), 0.0);

    SUBCASE("uniform second row gives log 2 on one adversarial triplet") {
        // rows: first saturated to identity, second exactly uniform
        b = {600.0, -600.0, 0.0, 0.0};
        std::vector<MixtureTriplet> t(1);
        t[0] = {{0.4, 0.6}, 1, 0, Provenance::Adversarial};
        CHECK(loss_transition(t, trans).item() ==
              doctest::Approx(std::log(2.0)).epsilon(1e-9));
    }

    SUBCASE("saturated identity rows make natural loss vanish") {
        b = {600.0, -600.0, -600.0, 600.0};
        std::vector<MixtureTriplet> t(2);
        t[0] = {{0.4, 0.6}, 0, 0, Provenance::Natural};
        t[1] = {{0.2, 0.1}, 1, 1, Provenance::Natural};
        CHECK(std::fabs(loss_transition(t, trans).item()) <= 1e-11);
    }
}

TEST_CASE("target loss collapses to plain cross entropy under an identity transition") {
    Rng init(13);
    TargetClassifier target(2, {6}, 2, init);
    TransitionNetwork trans(2, {4}, 2, init);
    auto& w = trans.params().at("w1").values_mut();
    auto& b = trans.params().at("b1").values_mut();
    std::fill(w.begin(), w.end(), 0.0);
    b = {600.0, -600.0, -600.0, 600.0};

    auto triplets = simple_triplets();
    Tensor x = Tensor::constant({3, 2}, {0.2, 0.3, 0.6, 0.1, 0.8, 0.9});
    Tensor plain = cross_entropy_mean(softmax(target.forward(x), 1), {0, 1, 0});
    CHECK(loss_target(triplets, target, trans).item() ==
          doctest::Approx(plain.item()).epsilon(1e-9));
}

TEST_CASE("perfect model plus identity transition drives the target loss to zero") {
    Rng init(15);
    TargetClassifier model = perfect_model(init);
    TransitionNetwork trans(2, {4}, 2, init);
    auto& w = trans.params().at("w1").values_mut();
    auto& b = trans.params().at("b1").values_mut();
    std::fill(w.begin(), w.end(), 0.0);
    b = {600.0, -600.0, -600.0, 600.0};
    std::vector<MixtureTriplet> t(2);
    t[0] = {{0.25, 0.5}, 0, 0, Provenance::Natural};
    t[1] = {{0.75, 0.5}, 1, 1, Provenance::Natural};
    CHECK(std::fabs(loss_target(t, model, trans).item()) <= 1e-8);
}

TEST_CASE("the two losses differ on mispredictions and agree on exact one-hot predictions") {
    Rng init(17);
    TransitionNetwork trans(2, {4}, 2, init);
    DataPair d = two_point_data();

    // model predicting the wrong class with certainty
    TargetClassifier wrong(2, {}, 2, init);
    wrong.params().at("w0").values_mut() = {40.0, -40.0, 0.0, 0.0};
    wrong.params().at("b0").values_mut() = {-20.0, 20.0};
    std::vector<MixtureTriplet> t(2);
    t[0] = {{0.25, 0.5}, 0, 0, Provenance::Natural};
    t[1] = {{0.75, 0.5}, 1, 1, Provenance::Natural};
    const double l_trans = loss_transition(t, trans).item();
    const double l_tar_wrong = loss_target(t, wrong, trans).item();
    CHECK(std::fabs(l_trans - l_tar_wrong) > 1e-3);

    // model predicting exactly the mixture label makes them coincide
    Rng init2(18);
    TargetClassifier right = perfect_model(init2);
    CHECK(loss_target(t, right, trans).item() ==
          doctest::Approx(l_trans).epsilon(1e-12));
}

TEST_CASE("losses stay finite and nonnegative for random parameters") {
    Rng init(19);
    TargetClassifier target(2, {8}, 3, init);
    TransitionNetwork trans(2, {8}, 3, init);
    std::vector<MixtureTriplet> t(4);
    Rng rng(20);
    for (auto& trip : t) {
        trip.x = {rng.next_double(), rng.next_double()};
        trip.mixture_label = static_cast<int>(rng.index(3));
        trip.natural_label = static_cast<int>(rng.index(3));
    }
    for (int trial = 0; trial < 10; ++trial) {
        target.params().for_each([&](const std::string&, Tensor& p, std::vector<double>&) {
            for (double& v : p.values_mut()) v = rng.uniform(-5, 5);
        });
        const double lt = loss_transition(t, trans).item();
        const double ltar = loss_target(t, target, trans).item();
        CHECK(std::isfinite(lt));
        CHECK(std::isfinite(ltar));
        CHECK(lt >= 0.0);
        CHECK(ltar >= 0.0);
    }
}

TEST_CASE("loss gradients pass finite differences") {
    Rng init(21);
    TargetClassifier target(2, {5}, 3, init);
    TransitionNetwork trans(2, {5}, 3, init);
    std::vector<MixtureTriplet> t(3);
    t[0] = {{0.1, 0.8}, 0, 0, Provenance::Natural};
    t[1] = {{0.5, 0.2}, 2, 1, Provenance::Adversarial};
    t[2] = {{0.9, 0.4}, 1, 1, Provenance::Natural};

    SUBCASE("transition loss wrt omega") {
        backward(loss_transition(t, trans));
        auto loss_fn = [&]() { return loss_transition(t, trans).item(); };
        trans.params().for_each([&](const std::string& name, Tensor& p, std::vector<double>&) {
            auto res = fd::check_leaf(p, loss_fn, [&](std::size_t i) { return p.grad()[i]; });
            CHECK_MESSAGE(res.max_rel_err < fd::kTol, name << ": " << res.worst);
        });
    }

    SUBCASE("target loss wrt theta through the full composition") {
        backward(loss_target(t, target, trans));
        auto loss_fn = [&]() { return loss_target(t, target, trans).item(); };
        target.params().for_each([&](const std::string& name, Tensor& p, std::vector<double>&) {
            auto res = fd::check_leaf(p, loss_fn, [&](std::size_t i) { return p.grad()[i]; });
            CHECK_MESSAGE(res.max_rel_err < fd::kTol, name << ": " << res.worst);
        });
    }

    SUBCASE("default routing sends no target-loss gradient into omega") {
        zero_grads(trans.params());
        backward(loss_target(t, target, trans, /*joint_flow=*/false));
        trans.params().for_each([&](const std::string&, Tensor& p, std::vector<double>&) {
            for (double g : p.grad()) CHECK(g == 0.0);
        });
        backward(loss_target(t, target, trans, /*joint_flow=*/true));
        double total = 0.0;
        trans.params().for_each([&](const std::string&, Tensor& p, std::vector<double>&) {
            for (double g : p.grad()) total += std::fabs(g);
        });
        CHECK(total > 0.0);
    }
}

TEST_CASE("a zero learning rate changes nothing, and frozen regimes freeze the target") {
    DataPair d = gen_blobs(3, 2, 25, 0.05, 23);
    Rng init(24);
    TargetClassifier target(2, {8}, 3, init);
    TransitionNetwork trans(2, {8}, 3, init);

    SUBCASE("lr 0 leaves both parameter sets bitwise unchanged") {
        TrainConfig cfg;
        cfg.regime = Regime::Joint;
        cfg.epochs = 1;
        cfg.batch_size = 16;
        cfg.lr = 0.0;
        cfg.momentum = 0.0;
        cfg.weight_decay = 0.0;
        cfg.inner_attack = training_attack(0.05);
        cfg.seed = 25;
        auto theta_before = snapshot(target.params());
        auto omega_before = snapshot(trans.params());
        train(cfg, d, target, &trans);
        CHECK(snapshot(target.params()) == theta_before);
        CHECK(snapshot(trans.params()) == omega_before);
    }

    SUBCASE("frozen-target regime leaves every theta entry bitwise unchanged") {
        TrainConfig cfg;
        cfg.regime = Regime::FrozenTarget;
        cfg.epochs = 2;
        cfg.batch_size = 16;
        cfg.lr = 0.1;
        cfg.inner_attack = training_attack(0.05, AttackObjective::TargetOnly);
        cfg.seed = 26;
        auto theta_before = snapshot(target.params());
        auto omega_before = snapshot(trans.params());
        train(cfg, d, target, &trans);
        CHECK(snapshot(target.params()) == theta_before);
        CHECK(snapshot(trans.params()) != omega_before);
    }
}

TEST_CASE("training replays exactly as a manual step-by-step execution") {
    DataPair d = gen_blobs(3, 2, 20, 0.05, 27);
    TrainConfig cfg;
    cfg.regime = Regime::Joint;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.lr = 0.05;
    cfg.lr_drop_fracs = {};  // a one-epoch budget would otherwise drop immediately
    cfg.momentum = 0.9;
    cfg.weight_decay = 2e-4;
    cfg.inner_attack = training_attack(0.08);
    cfg.seed = 28;

    Rng init_a(29);
    TargetClassifier target_a(2, {6}, 3, init_a);
    Rng init_a2(30);
    TransitionNetwork trans_a(2, {6}, 3, init_a2);
    Rng init_b(29);
    TargetClassifier target_b(2, {6}, 3, init_b);
    Rng init_b2(30);
    TransitionNetwork trans_b(2, {6}, 3, init_b2);

    train(cfg, d, target_a, &trans_a);

    // manual replay: same shuffle stream, same attack streams, same update
    // order; adversarial data for each batch comes from the parameters left
    // by the previous batch
    const SeedFanout seeds = SeedFanout::from(cfg.seed);
    Rng shuffle_rng(derive_seed(seeds.data, 2000));
    std::vector<std::size_t> order(d.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t at = 0; at < order.size(); at += 8, ++batch_index) {
        const std::size_t hi = std::min(order.size(), at + 8);
        std::vector<std::size_t> idx(order.begin() + at, order.begin() + hi);
        Tensor x = d.train.rows_tensor(idx);
        std::vector<int> y = d.train.labels_at(idx);
        Rng attack_rng(derive_seed(seeds.attack, 0 * 1000003ull + batch_index));
        auto triplets = build_mixture_batch(x, y, target_b, &trans_b, cfg.inner_attack,
                                            attack_rng, true);
        zero_grads(trans_b.params());
        zero_grads(target_b.params());
        Tensor lt = loss_transition(triplets, trans_b);
        backward(lt);
        Tensor ltar = loss_target(triplets, target_b, trans_b, false);
        backward(ltar);
        sgd_step(trans_b.params(), cfg.lr, cfg.momentum, cfg.weight_decay);
        sgd_step(target_b.params(), cfg.lr, cfg.momentum, cfg.weight_decay);
    }

    CHECK(snapshot(target_a.params()) == snapshot(target_b.params()));
    CHECK(snapshot(trans_a.params()) == snapshot(trans_b.params()));
}

TEST_CASE("every epoch touches two triplets per training instance") {
    DataPair d = gen_blobs(3, 2, 15, 0.05, 31);
    Tensor x = d.train.all_rows_tensor();
    Rng init(32);
    TargetClassifier target(2, {4}, 3, init);
    TransitionNetwork trans(2, {4}, 3, init);
    Rng rng(33);
    auto triplets =
        build_mixture_batch(x, d.train.labels, target, &trans, training_attack(0.05), rng);
    CHECK(triplets.size() == 2 * d.train.size());
    const std::size_t m = d.train.size();
    std::size_t naturals = 0, adversarials = 0;
    for (const auto& t : triplets)
        (t.provenance == Provenance::Natural ? naturals : adversarials)++;
    CHECK(naturals == m);
    CHECK(adversarials == m);
}

TEST_CASE("evaluate_accuracy contracts") {
    Rng init(35);
    TargetClassifier perfect = perfect_model(init);
    DataPair d = two_point_data();
    Rng r1(36);
    CHECK(evaluate_accuracy(perfect, nullptr, d.train, nullptr, r1) == 1.0);

    // constant model on balanced data predicts one class everywhere
    TargetClassifier constant(2, {}, 2, init);
    constant.params().at("w0").values_mut() = {0, 0, 0, 0};
    constant.params().at("b0").values_mut() = {1.0, 0.0};
    Rng r2(37);
    CHECK(evaluate_accuracy(constant, nullptr, d.train, nullptr, r2) == 0.5);

    // attacks can only lower accuracy
    DataPair blobs = gen_blobs(3, 2, 60, 0.15, 38);
    Rng init2(39);
    TargetClassifier trained(2, {16}, 3, init2);
    train_natural(trained, blobs, 20, 0.1, 0.9, 0.0, {0.75}, 32, 40);
    AttackConfig atk = training_attack(0.1, AttackObjective::TargetOnly);
    Rng r3(41), r4(42);
    const double clean = evaluate_accuracy(trained, nullptr, blobs.test, nullptr, r3);
    const double attacked = evaluate_accuracy(trained, nullptr, blobs.test, &atk, r4);
    CHECK(attacked <= clean);
}

TEST_CASE("fine-tuning: zero epochs is the identity and the frozen target never moves") {
    DataPair d = gen_blobs(3, 2, 20, 0.05, 43);
    Rng init(44);
    TargetClassifier target_b(2, {8}, 3, init);
    TransitionNetwork trans(2, {8}, 3, init);
    train_natural(target_b, d, 5, 0.1, 0.9, 0.0, {0.75}, 16, 45);

    TrainConfig cfg;
    cfg.regime = Regime::FineTune;
    cfg.batch_size = 16;
    cfg.inner_attack = training_attack(0.05);
    cfg.seed = 46;

    auto omega_before = snapshot(trans.params());
    auto theta_before = snapshot(target_b.params());
    cfg.epochs = 0;
    fine_tune_transition(trans, target_b, d, cfg);
    CHECK(snapshot(trans.params()) == omega_before);

    cfg.epochs = 2;
    fine_tune_transition(trans, target_b, d, cfg);
    CHECK(snapshot(target_b.params()) == theta_before);
    CHECK(snapshot(trans.params()) != omega_before);
}

TEST_CASE("fine-tuning rejects class-count mismatch") {
    DataPair d = gen_blobs(3, 2, 10, 0.05, 47);
    Rng init(48);
    TargetClassifier target_b(2, {4}, 4, init);
    TransitionNetwork trans(2, {4}, 3, init);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(fine_tune_transition(trans, target_b, d, cfg), config_error);
}

TEST_CASE("joint training at zero budget matches the natural-data regime direction") {
    DataPair d = gen_blobs(3, 2, 60, 0.05, 49);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 32;
    cfg.inner_attack = training_attack(0.0);
    cfg.seed = 50;

    Rng init_joint(51);
    TargetClassifier t_joint(2, {16}, 3, init_joint);
    TransitionNetwork tr_joint(2, {16}, 3, init_joint);
    cfg.regime = Regime::Joint;
    train(cfg, d, t_joint, &tr_joint);
    Rng r1(52);
    const double acc_joint = evaluate_accuracy(t_joint, &tr_joint, d.test, nullptr, r1);

    Rng init_at(51);
    TargetClassifier t_at(2, {16}, 3, init_at);
    cfg.regime = Regime::AtBaseline;
    cfg.inner_attack.objective = AttackObjective::TargetOnly;
    train(cfg, d, t_at, nullptr);
    Rng r2(53);
    const double acc_at = evaluate_accuracy(t_at, nullptr, d.test, nullptr, r2);

    CHECK(std::fabs(acc_joint - acc_at) <= 0.02);
}
