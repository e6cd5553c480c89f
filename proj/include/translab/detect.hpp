#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "translab/attack.hpp"
#include "translab/dataset.hpp"
#include "translab/nn.hpp"
#include "translab/train.hpp"

namespace translab {

/// Score of one instance: 1 - T_kk at the predicted label k; high means
/// likely adversarial.
struct DetectionScore {
    std::size_t instance_id = 0;
    int predicted_label = 0;
    double diagonal_p = 0.0;
    double score = 0.0;
    bool adversarial = false;  // ground truth
};

DetectionScore detect_score(const Tensor& x_row, const TargetClassifier& target,
                            const TransitionNetwork& trans, std::size_t instance_id = 0,
                            bool adversarial = false);

std::vector<DetectionScore> detect_scores(const Tensor& x, const TargetClassifier& target,
                                          const TransitionNetwork& trans, bool adversarial,
                                          std::size_t id_offset = 0);

/// Hard rule: natural iff the indexed diagonal element is >= every other
/// diagonal element.
bool detect_hard(const Tensor& x_row, const TargetClassifier& target,
                 const TransitionNetwork& trans);

/// Probability that a random adversarial outscores a random natural, ties
/// counted one half (rank statistic). Requires both classes present.
double auroc(const std::vector<DetectionScore>& scores);

struct AccuracyRow {
    std::string attack_name;
    double combined_accuracy = 0.0;  // composed prediction
    double target_accuracy = 0.0;    // target model alone on the same inputs
};

struct NamedAttack {
    std::string name;
    bool none = false;  // unperturbed evaluation
    AttackConfig cfg;
};

/// Accuracy per attack for each (target, transition) pairing; mutates
/// neither network.
std::vector<AccuracyRow> transfer_evaluate(const TransitionNetwork& trans,
                                           const TargetClassifier& target_b,
                                           const Dataset& data,
                                           const std::vector<NamedAttack>& attacks,
                                           std::uint64_t eval_seed);

struct MaskingCheck {
    std::string name;
    bool pass = false;
    double value_a = 0.0;
    double value_b = 0.0;
    std::string detail;
};

struct MaskingOptions {
    std::size_t random_points = 16;       // PGD-robust points to sample around
    std::size_t random_samples = 100000;  // perturbations per point
    double unbounded_epsilon = 1.0;
    double step_ratio = 0.223;  // step_size / epsilon for the 40-step attacks
};

/// The five gradient-masking checks: one-step vs iterative, black-box vs
/// white-box, unbounded attack, random sampling in the ball, and the
/// epsilon sweep. The surrogate crafts the black-box instances.
std::vector<MaskingCheck> masking_battery(const TargetClassifier& target,
                                          const TransitionNetwork& trans,
                                          const TargetClassifier& surrogate,
                                          const Dataset& data, double base_eps,
                                          std::uint64_t seed,
                                          const MaskingOptions& opts = {});

}  // namespace translab
