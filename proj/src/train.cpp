#include "translab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "translab/errors.hpp"

namespace translab {

Regime regime_from_string(const std::string& s) {
    if (s == "joint") return Regime::Joint;
    if (s == "at_baseline") return Regime::AtBaseline;
    if (s == "frozen_target") return Regime::FrozenTarget;
    if (s == "transition_only") return Regime::TransitionOnly;
    if (s == "fine_tune") return Regime::FineTune;
    throw config_error("train: unknown regime '" + s + "'");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Joint: return "joint";
        case Regime::AtBaseline: return "at_baseline";
        case Regime::FrozenTarget: return "frozen_target";
        case Regime::TransitionOnly: return "transition_only";
        default: return "fine_tune";
    }
}

void TrainConfig::validate() const {
    if (epochs < 0) throw config_error("train: epochs must be nonnegative");
    if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (lr < 0.0) throw config_error("train: lr must be nonnegative");
    if (momentum < 0.0 || momentum >= 1.0)
        throw config_error("train: momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw config_error("train: weight_decay must be nonnegative");
    for (double f : lr_drop_fracs)
        if (f <= 0.0 || f > 1.0)
            throw config_error("train: lr drop fractions must lie in (0, 1]");
}

std::vector<MixtureTriplet> build_mixture_batch(const Tensor& x, const std::vector<int>& y,
                                                const TargetClassifier& target,
                                                const TransitionNetwork* trans,
                                                const AttackConfig& attack, Rng& attack_rng,
                                                bool include_failed) {
    const std::size_t m = x.shape()[0];
    const std::size_t dim = x.shape()[1];
    Tensor x_adv = pgd(x, y, attack, target, trans, attack_rng);
    std::vector<int> y_adv = assign_adversarial_labels(x_adv, target);

    std::vector<MixtureTriplet> out;
    out.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        MixtureTriplet t;
        t.x.assign(x.values().begin() + i * dim, x.values().begin() + (i + 1) * dim);
        t.mixture_label = y[i];
        t.natural_label = y[i];
        t.provenance = Provenance::Natural;
        out.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!include_failed && y_adv[i] == y[i]) continue;
        MixtureTriplet t;
        t.x.assign(x_adv.values().begin() + i * dim, x_adv.values().begin() + (i + 1) * dim);
        t.mixture_label = y_adv[i];
        t.natural_label = y[i];
        t.provenance = Provenance::Adversarial;
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

Tensor triplets_tensor(const std::vector<MixtureTriplet>& triplets) {
    const std::size_t n = triplets.size();
    const std::size_t dim = triplets.front().x.size();
    std::vector<double> v;
    v.reserve(n * dim);
    for (const auto& t : triplets) v.insert(v.end(), t.x.begin(), t.x.end());
    return Tensor::constant({n, dim}, std::move(v));
}

std::vector<int> mixture_labels(const std::vector<MixtureTriplet>& triplets) {
    std::vector<int> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) out.push_back(t.mixture_label);
    return out;
}

std::vector<int> natural_labels(const std::vector<MixtureTriplet>& triplets) {
    std::vector<int> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) out.push_back(t.natural_label);
    return out;
}

}  // namespace

Tensor loss_transition(const std::vector<MixtureTriplet>& triplets,
                       const TransitionNetwork& trans) {
    if (triplets.empty()) throw input_error("loss_transition: empty triplet list");
    Tensor x = triplets_tensor(triplets);
    Tensor t_hat = trans.forward(x);
    Tensor rows = select_rows(t_hat, mixture_labels(triplets));
    return cross_entropy_mean(rows, natural_labels(triplets));
}

Tensor loss_target(const std::vector<MixtureTriplet>& triplets,
                   const TargetClassifier& target, const TransitionNetwork& trans,
                   bool joint_flow) {
    if (triplets.empty()) throw input_error("loss_target: empty triplet list");
    Tensor x = triplets_tensor(triplets);
    Tensor y_hat = softmax(target.forward(x), 1);
    Tensor t_hat = trans.forward(x);
    if (!joint_flow) t_hat = detach(t_hat);
    Tensor composed = posterior_compose(y_hat, t_hat);
    return cross_entropy_mean(composed, natural_labels(triplets));
}

double evaluate_accuracy(const TargetClassifier& target, const TransitionNetwork* trans,
                         const Dataset& data, const AttackConfig* attack, Rng& rng) {
    if (data.size() == 0) throw input_error("evaluate_accuracy: empty dataset");
    Tensor x = data.all_rows_tensor();
    if (attack) x = pgd(x, data.labels, *attack, target, trans, rng);
    std::vector<int> pred;
    if (trans) {
        Tensor y_hat = softmax(target.forward(x), 1);
        Tensor composed = posterior_compose(y_hat, trans->forward(x));
        const std::size_t c = target.classes();
        pred.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            pred[i] = argmax_row(composed.values().data() + i * c, c);
    } else {
        pred = target.predict(x);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (pred[i] == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

double lr_at_epoch(const TrainConfig& cfg, int epoch, int total_epochs) {
    double lr = cfg.lr;
    for (double frac : cfg.lr_drop_fracs) {
        const int drop = static_cast<int>(std::floor(frac * total_epochs));
        if (epoch >= drop) lr /= 10.0;
    }
    return lr;
}

void check_finite_loss(double v, int epoch, std::size_t batch_index) {
    if (!std::isfinite(v))
        throw state_error("training diverged: non-finite loss at epoch " +
                          std::to_string(epoch) + ", batch " + std::to_string(batch_index));
}

struct EpochPlan {
    std::vector<std::vector<std::size_t>> batches;
};

EpochPlan plan_epoch(std::size_t n, int batch_size, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    EpochPlan plan;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
        const std::size_t hi = std::min(n, at + static_cast<std::size_t>(batch_size));
        plan.batches.emplace_back(order.begin() + at, order.begin() + hi);
    }
    return plan;
}

}  // namespace

void train_natural(TargetClassifier& target, const DataPair& data, int epochs,
                   double lr, double momentum, double weight_decay,
                   const std::vector<double>& lr_drop_fracs, int batch_size,
                   std::uint64_t seed) {
    TrainConfig sched;
    sched.lr = lr;
    sched.lr_drop_fracs = lr_drop_fracs;
    const SeedFanout seeds = SeedFanout::from(seed);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seeds.data, 1000 + static_cast<std::uint64_t>(epoch)));
        EpochPlan plan = plan_epoch(data.train.size(), batch_size, shuffle_rng);
        const double lr_e = lr_at_epoch(sched, epoch, epochs);
        for (std::size_t b = 0; b < plan.batches.size(); ++b) {
            Tensor x = data.train.rows_tensor(plan.batches[b]);
            std::vector<int> y = data.train.labels_at(plan.batches[b]);
            zero_grads(target.params());
            Tensor loss = cross_entropy_mean(softmax(target.forward(x), 1), y);
            check_finite_loss(loss.item(), epoch, b);
            backward(loss);
            sgd_step(target.params(), lr_e, momentum, weight_decay);
        }
    }
}

RunRecord train(const TrainConfig& cfg, const DataPair& data, TargetClassifier& target,
                TransitionNetwork* trans) {
    cfg.validate();
    const bool needs_transition = cfg.regime != Regime::AtBaseline;
    if (needs_transition && trans == nullptr)
        throw config_error("train: regime '" + to_string(cfg.regime) +
                           "' requires a transition network");
    const bool update_target = cfg.regime == Regime::Joint || cfg.regime == Regime::AtBaseline;
    const bool update_transition = needs_transition;

    AttackConfig attack = cfg.inner_attack;
    attack.validate(target.classes(),
                    trans != nullptr && attack.objective != AttackObjective::TargetOnly);

    const SeedFanout seeds = SeedFanout::from(cfg.seed);
    const auto t0 = std::chrono::steady_clock::now();

    RunRecord record;
    record.seed = cfg.seed;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seeds.data, 2000 + static_cast<std::uint64_t>(epoch)));
        EpochPlan plan = plan_epoch(data.train.size(), cfg.batch_size, shuffle_rng);
        const double lr_e = lr_at_epoch(cfg, epoch, cfg.epochs);
        double sum_lt = 0.0, sum_ltar = 0.0;

        for (std::size_t b = 0; b < plan.batches.size(); ++b) {
            Tensor x = data.train.rows_tensor(plan.batches[b]);
            std::vector<int> y = data.train.labels_at(plan.batches[b]);

            // Adversarial instances for this batch come from the parameters
            // left by the previous batch; the update below happens strictly
            // after crafting.
            Rng attack_rng(derive_seed(
                seeds.attack, static_cast<std::uint64_t>(epoch) * 1000003ull + b));
            const TransitionNetwork* attack_trans =
                (trans != nullptr && attack.objective != AttackObjective::TargetOnly)
                    ? trans
                    : nullptr;
            std::vector<MixtureTriplet> triplets = build_mixture_batch(
                x, y, target, attack_trans, attack, attack_rng, cfg.include_failed);

            if (cfg.regime == Regime::AtBaseline) {
                Tensor xm = triplets_tensor(triplets);
                zero_grads(target.params());
                Tensor loss =
                    cross_entropy_mean(softmax(target.forward(xm), 1), natural_labels(triplets));
                check_finite_loss(loss.item(), epoch, b);
                sum_ltar += loss.item();
                backward(loss);
                sgd_step(target.params(), lr_e, cfg.momentum, cfg.weight_decay);
                continue;
            }

            zero_grads(trans->params());
            zero_grads(target.params());
            Tensor l_trans = loss_transition(triplets, *trans);
            check_finite_loss(l_trans.item(), epoch, b);
            sum_lt += l_trans.item();
            backward(l_trans);

            Tensor l_target = loss_target(triplets, target, *trans, cfg.joint_flow);
            check_finite_loss(l_target.item(), epoch, b);
            sum_ltar += l_target.item();
            if (update_target || cfg.joint_flow) backward(l_target);

            // both losses come from the same forward values; both updates
            // are applied only after both backward passes
            if (update_transition)
                sgd_step(trans->params(), lr_e, cfg.momentum, cfg.weight_decay);
            if (update_target)
                sgd_step(target.params(), lr_e, cfg.momentum, cfg.weight_decay);
            else
                zero_grads(target.params());
        }

        EpochMetrics m;
        m.epoch = epoch;
        const double nb = static_cast<double>(plan.batches.size());
        m.loss_transition = sum_lt / nb;
        m.loss_target = sum_ltar / nb;
        Rng nat_rng(derive_seed(seeds.eval, 3000 + static_cast<std::uint64_t>(epoch)));
        const TransitionNetwork* eval_trans = needs_transition ? trans : nullptr;
        m.natural_accuracy = evaluate_accuracy(target, eval_trans, data.test, nullptr, nat_rng);
        Rng adv_rng(derive_seed(seeds.eval, 4000 + static_cast<std::uint64_t>(epoch)));
        m.adversarial_accuracy =
            evaluate_accuracy(target, eval_trans, data.test, &attack, adv_rng);
        record.epochs.push_back(m);
    }

    record.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

RunRecord fine_tune_transition(TransitionNetwork& trans, const TargetClassifier& frozen_target,
                               const DataPair& data, const TrainConfig& cfg) {
    if (trans.classes() != frozen_target.classes())
        throw config_error("fine_tune: transition net has " +
                           std::to_string(trans.classes()) + " classes, target has " +
                           std::to_string(frozen_target.classes()));
    TrainConfig ft = cfg;
    ft.regime = Regime::FineTune;
    // the frozen target is shared, not copied; train() never updates it in
    // this regime
    return train(ft, data, const_cast<TargetClassifier&>(frozen_target), &trans);
}

}  // namespace translab
