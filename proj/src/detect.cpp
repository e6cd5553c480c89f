#include "translab/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "translab/errors.hpp"
#include "translab/kernels.hpp"

namespace translab {

std::vector<DetectionScore> detect_scores(const Tensor& x, const TargetClassifier& target,
                                          const TransitionNetwork& trans, bool adversarial,
                                          std::size_t id_offset) {
    if (x.rank() != 2)
        throw dimension_error("detect_scores: expects batch x d, got " + shape_str(x.shape()));
    const std::size_t batch = x.shape()[0];
    const std::size_t c = target.classes();
    std::vector<int> pred = target.predict(x);
    Tensor t_hat = trans.forward(x);
    std::vector<DetectionScore> out(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t k = static_cast<std::size_t>(pred[b]);
        const double p = t_hat.values()[(b * c + k) * c + k];
        out[b] = DetectionScore{id_offset + b, pred[b], p, 1.0 - p, adversarial};
    }
    return out;
}

DetectionScore detect_score(const Tensor& x_row, const TargetClassifier& target,
                            const TransitionNetwork& trans, std::size_t instance_id,
                            bool adversarial) {
    Tensor batch = reshape(x_row, {1, x_row.shape()[0]});
    DetectionScore s = detect_scores(batch, target, trans, adversarial, instance_id)[0];
    s.instance_id = instance_id;
    return s;
}

bool detect_hard(const Tensor& x_row, const TargetClassifier& target,
                 const TransitionNetwork& trans) {
    Tensor batch = reshape(x_row, {1, x_row.shape()[0]});
    const std::size_t c = target.classes();
    const std::size_t k = static_cast<std::size_t>(target.predict(batch)[0]);
    Tensor t_hat = trans.forward(batch);
    const double indexed = t_hat.values()[k * c + k];
    for (std::size_t j = 0; j < c; ++j)
        if (j != k && t_hat.values()[j * c + j] > indexed) return false;
    return true;
}

double auroc(const std::vector<DetectionScore>& scores) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : scores) (s.adversarial ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw input_error("auroc: need both natural and adversarial scores");

    // midrank Mann-Whitney; ties get the average rank, which counts each
    // tied natural/adversarial pair as one half
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].score < scores[b].score;
    });
    std::vector<double> rank(scores.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               scores[order[j + 1]].score == scores[order[i]].score)
            ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based midrank
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (scores[k].adversarial) rank_sum_pos += rank[k];
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

std::vector<AccuracyRow> transfer_evaluate(const TransitionNetwork& trans,
                                           const TargetClassifier& target_b,
                                           const Dataset& data,
                                           const std::vector<NamedAttack>& attacks,
                                           std::uint64_t eval_seed) {
    if (trans.classes() != target_b.classes())
        throw config_error("transfer: transition net has " + std::to_string(trans.classes()) +
                           " classes, target has " + std::to_string(target_b.classes()));
    std::vector<AccuracyRow> rows;
    std::size_t attack_index = 0;
    for (const auto& att : attacks) {
        AccuracyRow row;
        row.attack_name = att.name;
        Tensor x = data.all_rows_tensor();
        if (!att.none) {
            Rng rng(derive_seed(eval_seed, 100 + attack_index));
            const TransitionNetwork* craft_trans =
                att.cfg.objective == AttackObjective::TargetOnly ? nullptr : &trans;
            x = pgd(x, data.labels, att.cfg, target_b, craft_trans, rng);
        }
        const std::size_t c = target_b.classes();
        Tensor y_hat = softmax(target_b.forward(x), 1);
        Tensor composed = posterior_compose(y_hat, trans.forward(x));
        std::vector<int> pred_target = target_b.predict(x);
        std::size_t ok_combined = 0, ok_target = 0;
        for (std::size_t b = 0; b < data.size(); ++b) {
            const int pc = argmax_row(composed.values().data() + b * c, c);
            if (pc == data.labels[b]) ++ok_combined;
            if (pred_target[b] == data.labels[b]) ++ok_target;
        }
        row.combined_accuracy = static_cast<double>(ok_combined) / data.size();
        row.target_accuracy = static_cast<double>(ok_target) / data.size();
        rows.push_back(row);
        ++attack_index;
    }
    return rows;
}

namespace {

// batched composed prediction without recording gradients anywhere useful;
// chunked to bound peak memory
std::vector<int> composed_predictions(const TargetClassifier& target,
                                      const TransitionNetwork& trans, const Tensor& x) {
    const std::size_t n = x.shape()[0];
    const std::size_t c = target.classes();
    Tensor y_hat = softmax(target.forward(x), 1);
    Tensor composed = posterior_compose(y_hat, trans.forward(x));
    std::vector<int> pred(n);
    for (std::size_t i = 0; i < n; ++i)
        pred[i] = argmax_row(composed.values().data() + i * c, c);
    return pred;
}

AttackConfig sweep_attack(double eps, double step_ratio) {
    AttackConfig cfg;
    cfg.norm = Norm::Linf;
    cfg.epsilon = eps;
    cfg.steps = 40;
    cfg.step_size = step_ratio * eps;
    cfg.random_start = true;
    cfg.objective = AttackObjective::Combined;
    return cfg;
}

}  // namespace

std::vector<MaskingCheck> masking_battery(const TargetClassifier& target,
                                          const TransitionNetwork& trans,
                                          const TargetClassifier& surrogate,
                                          const Dataset& data, double base_eps,
                                          std::uint64_t seed, const MaskingOptions& opts) {
    std::vector<MaskingCheck> checks;
    Tensor x_nat = data.all_rows_tensor();
    const std::vector<int>& y = data.labels;

    // white-box PGD-40 accuracy, reused by several checks
    AttackConfig pgd40 = sweep_attack(base_eps, opts.step_ratio);
    Rng rng_wb(derive_seed(seed, 301));
    Tensor x_wb = pgd(x_nat, y, pgd40, target, &trans, rng_wb);
    std::vector<int> pred_wb = composed_predictions(target, trans, x_wb);
    std::size_t ok_wb = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (pred_wb[i] == y[i]) ++ok_wb;
    const double acc_wb = static_cast<double>(ok_wb) / data.size();

    {  // (i) one-step attacks do not beat iterative ones
        AttackConfig one = pgd40;
        one.steps = 1;
        one.step_size = base_eps;
        one.random_start = false;
        Rng rng(derive_seed(seed, 302));
        Tensor x1 = pgd(x_nat, y, one, target, &trans, rng);
        std::vector<int> pred = composed_predictions(target, trans, x1);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (pred[i] == y[i]) ++ok;
        const double acc_one = static_cast<double>(ok) / data.size();
        checks.push_back({"one_step_vs_iterative", acc_one >= acc_wb, acc_one, acc_wb,
                          "one-step accuracy vs 40-step accuracy"});
    }

    {  // (ii) black-box instances from an independent surrogate are weaker
        AttackConfig bb = pgd40;
        bb.objective = AttackObjective::TargetOnly;
        Rng rng(derive_seed(seed, 303));
        Tensor x_bb = pgd(x_nat, y, bb, surrogate, nullptr, rng);
        std::vector<int> pred = composed_predictions(target, trans, x_bb);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (pred[i] == y[i]) ++ok;
        const double acc_bb = static_cast<double>(ok) / data.size();
        checks.push_back({"black_box_vs_white_box", acc_bb >= acc_wb, acc_bb, acc_wb,
                          "surrogate-crafted accuracy vs white-box accuracy"});
    }

    {  // (iii) an unbounded attack succeeds almost everywhere
        AttackConfig unbounded = sweep_attack(opts.unbounded_epsilon, opts.step_ratio);
        Rng rng(derive_seed(seed, 304));
        Tensor xu = pgd(x_nat, y, unbounded, target, &trans, rng);
        std::vector<int> pred = composed_predictions(target, trans, xu);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (pred[i] == y[i]) ++ok;
        const double acc_u = static_cast<double>(ok) / data.size();
        checks.push_back({"unbounded_attack", acc_u <= 0.05, acc_u, 0.05,
                          "accuracy at epsilon = " + std::to_string(opts.unbounded_epsilon)});
    }

    {  // (iv) random sampling inside the ball around PGD-robust points
        std::vector<std::size_t> robust;
        for (std::size_t i = 0; i < data.size() && robust.size() < opts.random_points; ++i)
            if (pred_wb[i] == y[i]) robust.push_back(i);
        std::size_t found = 0;
        std::size_t total = 0;
        const std::size_t dim = data.dim;
        for (std::size_t ridx = 0; ridx < robust.size(); ++ridx) {
            const std::size_t i = robust[ridx];
            const double* base = data.row(i);
            Rng rng(derive_seed(seed, 40000 + ridx));
            const std::size_t chunk = 8192;
            for (std::size_t at = 0; at < opts.random_samples; at += chunk) {
                const std::size_t m = std::min(chunk, opts.random_samples - at);
                std::vector<double> pts(m * dim);
                for (std::size_t s = 0; s < m; ++s)
                    for (std::size_t d = 0; d < dim; ++d)
                        pts[s * dim + d] = std::clamp(
                            base[d] + rng.uniform(-base_eps, base_eps), 0.0, 1.0);
                Tensor xs = Tensor::constant({m, dim}, std::move(pts));
                std::vector<int> pred = composed_predictions(target, trans, xs);
                for (std::size_t s = 0; s < m; ++s)
                    if (pred[s] != y[i]) ++found;
                total += m;
            }
        }
        const double frac = total == 0 ? 0.0 : static_cast<double>(found) / total;
        checks.push_back({"random_sampling", frac < 0.01, frac,
                          static_cast<double>(robust.size()),
                          std::to_string(found) + " misclassified samples over " +
                              std::to_string(total) + " draws"});
    }

    {  // (v) accuracy does not increase with the distortion bound
        bool monotone = true;
        double prev = 2.0;
        std::string seq;
        for (int k = 0; k < 4; ++k) {
            const double eps = base_eps * static_cast<double>(1 << k);
            AttackConfig cfg = sweep_attack(eps, opts.step_ratio);
            Rng rng(derive_seed(seed, 305 + static_cast<std::uint64_t>(k)));
            Tensor xs = pgd(x_nat, y, cfg, target, &trans, rng);
            std::vector<int> pred = composed_predictions(target, trans, xs);
            std::size_t ok = 0;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (pred[i] == y[i]) ++ok;
            const double acc = static_cast<double>(ok) / data.size();
            if (acc > prev) monotone = false;
            prev = acc;
            if (!seq.empty()) seq += "/";
            seq += std::to_string(acc);
        }
        checks.push_back({"distortion_sweep", monotone, base_eps, base_eps * 8.0,
                          "accuracy at 1x/2x/4x/8x: " + seq});
    }

    return checks;
}

}  // namespace translab
