#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "translab/attack.hpp"
#include "translab/dataset.hpp"
#include "translab/nn.hpp"
#include "translab/rng.hpp"

namespace translab {

enum class Provenance { Natural, Adversarial };

/// One mixture-training unit: instance, mixture label, natural label.
struct MixtureTriplet {
    std::vector<double> x;
    int mixture_label = 0;
    int natural_label = 0;
    Provenance provenance = Provenance::Natural;
};

// joint:           adversarial training of target model and transition net;
// at_baseline:     adversarial training of the target model alone;
// frozen_target:   transition net only, general (target-only) attacks,
//                  target model fixed;
// transition_only: transition net only, adaptive attacks, naturally
//                  pre-trained target fixed;
// fine_tune:       continue transition training against a new frozen target.
enum class Regime { Joint, AtBaseline, FrozenTarget, TransitionOnly, FineTune };

Regime regime_from_string(const std::string& s);
std::string to_string(Regime r);

struct TrainConfig {
    Regime regime = Regime::Joint;
    int epochs = 60;
    int batch_size = 64;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 2e-4;
    // learning rate divided by 10 at these fractions of the epoch budget
    std::vector<double> lr_drop_fracs{0.75, 0.9};
    AttackConfig inner_attack;
    std::uint64_t seed = 1;
    // route the target loss's gradient into the transition net as well
    bool joint_flow = false;
    // keep adversarial triplets whose attack failed to flip the prediction
    bool include_failed = true;
    // natural pre-training epochs for regimes that need a frozen target and
    // were not given a checkpoint; <0 means "same as epochs"
    int pretrain_epochs = -1;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double loss_transition = 0.0;
    double loss_target = 0.0;
    double natural_accuracy = 0.0;
    double adversarial_accuracy = 0.0;
};

struct RunRecord {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> epochs;
    std::vector<std::pair<std::string, double>> final_accuracies;
    double duration_seconds = 0.0;
};

/// Alg.-style mixture batch: the m natural pairs followed by their m attacked
/// counterparts labeled with the target model's predictions.
std::vector<MixtureTriplet> build_mixture_batch(const Tensor& x, const std::vector<int>& y,
                                                const TargetClassifier& target,
                                                const TransitionNetwork* trans,
                                                const AttackConfig& attack, Rng& attack_rng,
                                                bool include_failed = true);

/// Mean cross-entropy between the mixture-label row of each instance's
/// transition matrix and the natural label; gradients reach only the
/// transition net.
Tensor loss_transition(const std::vector<MixtureTriplet>& triplets,
                       const TransitionNetwork& trans);

/// Mean cross-entropy between the composed natural posterior and the natural
/// label. With joint_flow off the transition matrix is treated as a constant
/// so gradients reach only the target model.
Tensor loss_target(const std::vector<MixtureTriplet>& triplets,
                   const TargetClassifier& target, const TransitionNetwork& trans,
                   bool joint_flow = false);

/// Accuracy of the deployed prediction rule: argmax of the composed posterior
/// when a transition net is given, argmax of the target model otherwise. If
/// an attack config is given every instance is perturbed first.
double evaluate_accuracy(const TargetClassifier& target, const TransitionNetwork* trans,
                         const Dataset& data, const AttackConfig* attack, Rng& rng);

/// Per-epoch trainer for all regimes. The caller owns the networks; frozen
/// regimes never touch the target parameters.
RunRecord train(const TrainConfig& cfg, const DataPair& data, TargetClassifier& target,
                TransitionNetwork* trans);

/// Continue training only the transition net against a new frozen target.
RunRecord fine_tune_transition(TransitionNetwork& trans, const TargetClassifier& frozen_target,
                               const DataPair& data, const TrainConfig& cfg);

/// Plain natural training of the target model (no attacks, no transition).
void train_natural(TargetClassifier& target, const DataPair& data, int epochs,
                   double lr, double momentum, double weight_decay,
                   const std::vector<double>& lr_drop_fracs, int batch_size,
                   std::uint64_t seed);

}  // namespace translab
