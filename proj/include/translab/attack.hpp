#pragma once

#include <string>
#include <vector>

#include "translab/nn.hpp"
#include "translab/rng.hpp"
#include "translab/tensor.hpp"

namespace translab {

enum class Norm { Linf, L2 };

enum class AttackMode { Nontarget, Target, TargetMatrix };

// combined: loss of the composed model (transition applied);
// matrix:   drive the transition matrix toward a chosen target matrix;
// dual:     combined plus the target model's own loss;
// target_only: plain loss on the target model alone.
enum class AttackObjective { Combined, Matrix, Dual, TargetOnly };

struct AttackConfig {
    Norm norm = Norm::Linf;
    double epsilon = 0.0;
    int steps = 1;
    double step_size = 0.0;
    bool random_start = false;
    AttackMode mode = AttackMode::Nontarget;
    // fixed target class for Target mode; -1 picks the least-likely class of
    // the clean input per instance (falling back past the true label)
    int target_label = -1;
    std::vector<double> target_matrix;  // C x C, row-major; empty -> anti-diagonal identity
    std::string target_matrix_path;     // optional file the harness loads it from
    AttackObjective objective = AttackObjective::Combined;
    double dual_weight_combined = 1.0;
    double dual_weight_target = 1.0;

    void validate(std::size_t classes, bool has_transition) const;
};

Norm norm_from_string(const std::string& s);
AttackMode attack_mode_from_string(const std::string& s);
AttackObjective attack_objective_from_string(const std::string& s);
std::string to_string(Norm n);
std::string to_string(AttackMode m);
std::string to_string(AttackObjective o);

/// The ascent objective the attack maximizes, as a scalar over the batch.
/// `target_labels`, when given, are the resolved per-instance targets for
/// Target mode; otherwise they are resolved from x_adv itself.
Tensor attack_loss(const Tensor& x_adv, const std::vector<int>& y, const AttackConfig& cfg,
                   const TargetClassifier& target, const TransitionNetwork* trans,
                   const std::vector<int>* target_labels = nullptr);

/// Projected gradient ascent on attack_loss inside the epsilon ball around
/// x, clipped to [0,1]^d after every step. A zero gradient at an L2 step
/// leaves the iterate unchanged for that step.
Tensor pgd(const Tensor& x, const std::vector<int>& y, const AttackConfig& cfg,
           const TargetClassifier& target, const TransitionNetwork* trans, Rng& rng);

/// pgd with steps=1, no random start, step_size = epsilon.
Tensor fgsm(const Tensor& x, const std::vector<int>& y, double epsilon,
            const TargetClassifier& target, const TransitionNetwork* trans,
            AttackObjective objective, Rng& rng);

/// argmax of the target model on x_adv, ties toward the lowest class index;
/// the mixture label attached to adversarial instances.
std::vector<int> assign_adversarial_labels(const Tensor& x_adv,
                                           const TargetClassifier& target);

/// Least-likely class of each row under the current model, skipping the true
/// label so targets stay valid.
std::vector<int> least_likely_labels(const TargetClassifier& target, const Tensor& x,
                                     const std::vector<int>& true_labels);

/// Reads a whitespace-separated C x C matrix file.
std::vector<double> load_target_matrix(const std::string& path, std::size_t classes);

}  // namespace translab
