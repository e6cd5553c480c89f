#include "translab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "translab/errors.hpp"
#include "translab/kernels.hpp"

namespace translab {

void AttackConfig::validate(std::size_t classes, bool has_transition) const {
    if (epsilon < 0.0) throw config_error("attack: epsilon must be nonnegative");
    if (steps < 1) throw config_error("attack: steps must be >= 1");
    if (step_size <= 0.0 && epsilon > 0.0)
        throw config_error("attack: step_size must be positive");
    const bool needs_transition = objective == AttackObjective::Combined ||
                                  objective == AttackObjective::Matrix ||
                                  objective == AttackObjective::Dual;
    if (needs_transition && !has_transition)
        throw config_error("attack: objective '" + to_string(objective) +
                           "' requires a transition network");
    if (mode == AttackMode::Target && target_label >= static_cast<int>(classes))
        throw config_error("attack: target label " + std::to_string(target_label) +
                           " out of range for " + std::to_string(classes) + " classes");
    if (!target_matrix.empty() && target_matrix.size() != classes * classes)
        throw config_error("attack: target matrix has " +
                           std::to_string(target_matrix.size()) + " entries, expected " +
                           std::to_string(classes * classes));
}

Norm norm_from_string(const std::string& s) {
    if (s == "linf") return Norm::Linf;
    if (s == "l2") return Norm::L2;
    throw config_error("attack: unknown norm '" + s + "' (want linf or l2)");
}

AttackMode attack_mode_from_string(const std::string& s) {
    if (s == "nontarget") return AttackMode::Nontarget;
    if (s == "target") return AttackMode::Target;
    if (s == "target_matrix") return AttackMode::TargetMatrix;
    throw config_error("attack: unknown mode '" + s + "'");
}

AttackObjective attack_objective_from_string(const std::string& s) {
    if (s == "combined") return AttackObjective::Combined;
    if (s == "matrix") return AttackObjective::Matrix;
    if (s == "dual") return AttackObjective::Dual;
    if (s == "target_only") return AttackObjective::TargetOnly;
    throw config_error("attack: unknown objective '" + s + "'");
}

std::string to_string(Norm n) { return n == Norm::Linf ? "linf" : "l2"; }

std::string to_string(AttackMode m) {
    switch (m) {
        case AttackMode::Nontarget: return "nontarget";
        case AttackMode::Target: return "target";
        default: return "target_matrix";
    }
}

std::string to_string(AttackObjective o) {
    switch (o) {
        case AttackObjective::Combined: return "combined";
        case AttackObjective::Matrix: return "matrix";
        case AttackObjective::Dual: return "dual";
        default: return "target_only";
    }
}

std::vector<int> least_likely_labels(const TargetClassifier& target, const Tensor& x,
                                     const std::vector<int>& true_labels) {
    Tensor logits = target.forward(x);
    const std::size_t batch = logits.shape()[0];
    const std::size_t classes = target.classes();
    std::vector<int> out(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = logits.values().data() + b * classes;
        std::size_t best = classes;
        for (std::size_t j = 0; j < classes; ++j) {
            if (static_cast<int>(j) == true_labels[b]) continue;
            if (best == classes || row[j] < row[best]) best = j;
        }
        out[b] = static_cast<int>(best);
    }
    return out;
}

namespace {

std::vector<int> resolve_targets(const AttackConfig& cfg, const TargetClassifier& target,
                                 const Tensor& x, const std::vector<int>& y) {
    if (cfg.target_label >= 0) {
        std::vector<int> out(y.size(), cfg.target_label);
        // a fixed target equal to the true label is invalid; fall back to the
        // least-likely class for those instances
        std::vector<int> least;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cfg.target_label) {
                if (least.empty()) least = least_likely_labels(target, x, y);
                out[i] = least[i];
            }
        }
        return out;
    }
    return least_likely_labels(target, x, y);
}

}  // namespace

Tensor attack_loss(const Tensor& x_adv, const std::vector<int>& y, const AttackConfig& cfg,
                   const TargetClassifier& target, const TransitionNetwork* trans,
                   const std::vector<int>* target_labels) {
    cfg.validate(target.classes(), trans != nullptr);
    const std::size_t classes = target.classes();

    if (cfg.objective == AttackObjective::Matrix) {
        Tensor t_hat = trans->forward(x_adv);
        const std::size_t batch = t_hat.shape()[0];
        std::vector<double> tstar =
            cfg.target_matrix.empty() ? anti_diagonal_identity(classes) : cfg.target_matrix;
        std::vector<double> tiled;
        tiled.reserve(batch * tstar.size());
        for (std::size_t b = 0; b < batch; ++b)
            tiled.insert(tiled.end(), tstar.begin(), tstar.end());
        Tensor target_t = Tensor::constant({batch, classes, classes}, std::move(tiled));
        return scale(mse(t_hat, target_t), -1.0);
    }

    Tensor y_hat = softmax(target.forward(x_adv), 1);

    std::vector<int> ystar;
    if (cfg.mode == AttackMode::Target)
        ystar = target_labels ? *target_labels : resolve_targets(cfg, target, x_adv, y);

    if (cfg.objective == AttackObjective::TargetOnly) {
        if (cfg.mode == AttackMode::Target)
            return scale(cross_entropy_mean(y_hat, ystar), -1.0);
        return cross_entropy_mean(y_hat, y);
    }

    Tensor t_hat = trans->forward(x_adv);
    Tensor composed = posterior_compose(y_hat, t_hat);
    Tensor combined_term = cfg.mode == AttackMode::Target
                               ? scale(cross_entropy_mean(composed, ystar), -1.0)
                               : cross_entropy_mean(composed, y);
    if (cfg.objective == AttackObjective::Combined) return combined_term;

    // dual: combined term plus the target model's own cross-entropy, which
    // keeps the natural label even in target mode
    Tensor ce_target = cross_entropy_mean(y_hat, y);
    return add(scale(combined_term, cfg.dual_weight_combined),
               scale(ce_target, cfg.dual_weight_target));
}

namespace {

void project_and_clip(std::vector<double>& x_adv, const std::vector<double>& x_nat,
                      std::size_t batch, std::size_t dim, Norm norm, double eps) {
    if (norm == Norm::Linf) {
        kernels::map_n(batch * dim, [&](std::size_t i) {
            const double lo = std::max(0.0, x_nat[i] - eps);
            const double hi = std::min(1.0, x_nat[i] + eps);
            x_adv[i] = std::clamp(x_adv[i], lo, hi);
        });
        return;
    }
    kernels::map_n(batch, [&](std::size_t b) {
        double* xa = x_adv.data() + b * dim;
        const double* xn = x_nat.data() + b * dim;
        double norm2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double delta = xa[d] - xn[d];
            norm2 += delta * delta;
        }
        const double len = std::sqrt(norm2);
        if (len > eps && len > 0.0) {
            const double s = eps / len;
            for (std::size_t d = 0; d < dim; ++d) xa[d] = xn[d] + (xa[d] - xn[d]) * s;
        }
        for (std::size_t d = 0; d < dim; ++d) xa[d] = std::clamp(xa[d], 0.0, 1.0);
    });
}

}  // namespace

Tensor pgd(const Tensor& x, const std::vector<int>& y, const AttackConfig& cfg,
           const TargetClassifier& target, const TransitionNetwork* trans, Rng& rng) {
    cfg.validate(target.classes(), trans != nullptr);
    if (x.rank() != 2)
        throw dimension_error("pgd: expects batch x d input, got " + shape_str(x.shape()));
    const std::size_t batch = x.shape()[0], dim = x.shape()[1];
    if (y.size() != batch)
        throw dimension_error("pgd: " + std::to_string(y.size()) + " labels for batch " +
                              std::to_string(batch));

    // Targets resolved once on the clean input, as the attacker would.
    std::vector<int> targets;
    const std::vector<int>* targets_ptr = nullptr;
    if (cfg.mode == AttackMode::Target) {
        targets = least_likely_labels(target, x, y);
        if (cfg.target_label >= 0)
            for (std::size_t i = 0; i < y.size(); ++i)
                if (y[i] != cfg.target_label) targets[i] = cfg.target_label;
        targets_ptr = &targets;
    }

    std::vector<double> x_adv = x.values();
    if (cfg.random_start && cfg.epsilon > 0.0) {
        if (cfg.norm == Norm::Linf) {
            for (double& v : x_adv) v += rng.uniform(-cfg.epsilon, cfg.epsilon);
        } else {
            // uniform direction scaled by a uniform radius
            for (std::size_t b = 0; b < batch; ++b) {
                std::vector<double> dir(dim);
                double norm2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    dir[d] = rng.normal();
                    norm2 += dir[d] * dir[d];
                }
                const double len = std::sqrt(norm2);
                const double radius = cfg.epsilon * rng.next_double();
                if (len > 0.0)
                    for (std::size_t d = 0; d < dim; ++d)
                        x_adv[b * dim + d] += dir[d] / len * radius;
            }
        }
        project_and_clip(x_adv, x.values(), batch, dim, cfg.norm, cfg.epsilon);
    }

    for (int step = 0; step < cfg.steps; ++step) {
        Tensor iterate = Tensor::variable({batch, dim}, x_adv);
        Tensor objective = attack_loss(iterate, y, cfg, target, trans, targets_ptr);
        backward(objective);
        const std::vector<double>& g = iterate.grad();
        if (cfg.norm == Norm::Linf) {
            kernels::map_n(batch * dim, [&](std::size_t i) {
                const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
                x_adv[i] += cfg.step_size * s;
            });
        } else {
            kernels::map_n(batch, [&](std::size_t b) {
                const double* gb = g.data() + b * dim;
                double norm2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) norm2 += gb[d] * gb[d];
                const double len = std::sqrt(norm2);
                if (len == 0.0) return;  // keep the iterate unchanged this step
                for (std::size_t d = 0; d < dim; ++d)
                    x_adv[b * dim + d] += cfg.step_size * gb[d] / len;
            });
        }
        project_and_clip(x_adv, x.values(), batch, dim, cfg.norm, cfg.epsilon);
    }
    return Tensor::constant({batch, dim}, std::move(x_adv));
}

Tensor fgsm(const Tensor& x, const std::vector<int>& y, double epsilon,
            const TargetClassifier& target, const TransitionNetwork* trans,
            AttackObjective objective, Rng& rng) {
    AttackConfig cfg;
    cfg.epsilon = epsilon;
    cfg.steps = 1;
    cfg.step_size = epsilon > 0.0 ? epsilon : 1.0;
    cfg.random_start = false;
    cfg.objective = objective;
    return pgd(x, y, cfg, target, trans, rng);
}

std::vector<int> assign_adversarial_labels(const Tensor& x_adv,
                                           const TargetClassifier& target) {
    return target.predict(x_adv);
}

std::vector<double> load_target_matrix(const std::string& path, std::size_t classes) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open target matrix file '" + path + "'");
    std::vector<double> m;
    double v;
    while (in >> v) m.push_back(v);
    if (m.size() != classes * classes)
        throw parse_error("target matrix file '" + path + "' has " +
                          std::to_string(m.size()) + " entries, expected " +
                          std::to_string(classes * classes));
    return m;
}

}  // namespace translab
