#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "translab/params.hpp"
#include "translab/rng.hpp"
#include "translab/tensor.hpp"

namespace translab {

/// Per-instance C x C row-stochastic matrix extracted from a forward pass.
struct TransitionMatrix {
    std::size_t classes = 0;
    std::vector<double> entries;  // row-major
    std::optional<std::size_t> source_instance;

    double at(std::size_t i, std::size_t j) const { return entries[i * classes + j]; }
};

struct MlpConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 0;
};

/// Plain fully connected net, rectifier between hidden layers, raw linear
/// output. Weights init uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
class Mlp {
public:
    Mlp(MlpConfig cfg, Rng& init_rng);

    Tensor forward(const Tensor& x) const;  // batch x input -> batch x output logits

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    const MlpConfig& config() const { return cfg_; }

private:
    MlpConfig cfg_;
    ParameterSet params_;
};

class TargetClassifier {
public:
    TargetClassifier(std::size_t input_dim, std::vector<std::size_t> hidden,
                     std::size_t classes, Rng& init_rng);

    /// Raw logits, batch x C; no softmax baked in.
    Tensor forward(const Tensor& x) const;
    std::vector<int> predict(const Tensor& x) const;  // argmax, ties -> lowest

    std::size_t classes() const { return classes_; }
    std::size_t input_dim() const { return net_.config().input_dim; }
    ParameterSet& params() { return net_.params(); }
    const ParameterSet& params() const { return net_.params(); }
    const std::vector<std::size_t>& hidden() const { return net_.config().hidden; }

private:
    std::size_t classes_;
    Mlp net_;
};

/// Maps an instance to a C x C row-stochastic matrix: C^2 raw outputs,
/// reshaped and passed through a per-row softmax.
class TransitionNetwork {
public:
    TransitionNetwork(std::size_t input_dim, std::vector<std::size_t> hidden,
                      std::size_t classes, Rng& init_rng);

    /// batch x d -> batch x C x C, every row on the simplex; differentiable.
    Tensor forward(const Tensor& x) const;
    TransitionMatrix matrix_for(const Tensor& x_row) const;  // single instance

    std::size_t classes() const { return classes_; }
    std::size_t input_dim() const { return net_.config().input_dim; }
    ParameterSet& params() { return net_.params(); }
    const ParameterSet& params() const { return net_.params(); }
    const std::vector<std::size_t>& hidden() const { return net_.config().hidden; }

private:
    std::size_t classes_;
    Mlp net_;
};

/// Natural-label posterior from the mixture posterior and a transition
/// matrix: T^T p, i.e. the p-weighted mixture of T's rows. Never inverts.
Tensor infer_natural_posterior(const Tensor& p_mix, const Tensor& t);

std::vector<double> anti_diagonal_identity(std::size_t classes);

}  // namespace translab
