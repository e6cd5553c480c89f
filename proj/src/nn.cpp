#include "translab/nn.hpp"

#include <cmath>

#include "translab/errors.hpp"

namespace translab {

Mlp::Mlp(MlpConfig cfg, Rng& init_rng) : cfg_(std::move(cfg)) {
    if (cfg_.input_dim == 0 || cfg_.output_dim == 0)
        throw config_error("mlp: input and output widths must be positive");
    std::vector<std::size_t> widths;
    widths.push_back(cfg_.input_dim);
    widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    widths.push_back(cfg_.output_dim);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_in * fan_out);
        for (double& v : w) v = init_rng.uniform(-bound, bound);
        params_.insert("w" + std::to_string(l),
                       Tensor::variable({fan_in, fan_out}, std::move(w)));
        params_.insert("b" + std::to_string(l),
                       Tensor::zeros({fan_out}, /*requires_grad=*/true));
    }
}

Tensor Mlp::forward(const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != cfg_.input_dim)
        throw dimension_error("mlp forward: input " + shape_str(x.shape()) +
                              " does not match width " + std::to_string(cfg_.input_dim));
    const std::size_t layers = cfg_.hidden.size() + 1;
    Tensor h = x;
    for (std::size_t l = 0; l < layers; ++l) {
        h = add_rowvec(matmul(h, params_.at("w" + std::to_string(l))),
                       params_.at("b" + std::to_string(l)));
        if (l + 1 < layers) h = relu(h);
    }
    return h;
}

TargetClassifier::TargetClassifier(std::size_t input_dim, std::vector<std::size_t> hidden,
                                   std::size_t classes, Rng& init_rng)
    : classes_(classes), net_(MlpConfig{input_dim, std::move(hidden), classes}, init_rng) {
    if (classes < 2) throw config_error("target classifier: need at least 2 classes");
}

Tensor TargetClassifier::forward(const Tensor& x) const { return net_.forward(x); }

std::vector<int> TargetClassifier::predict(const Tensor& x) const {
    Tensor logits = net_.forward(x);
    const std::size_t batch = logits.shape()[0];
    std::vector<int> out(batch);
    for (std::size_t b = 0; b < batch; ++b)
        out[b] = argmax_row(logits.values().data() + b * classes_, classes_);
    return out;
}

TransitionNetwork::TransitionNetwork(std::size_t input_dim, std::vector<std::size_t> hidden,
                                     std::size_t classes, Rng& init_rng)
    : classes_(classes),
      net_(MlpConfig{input_dim, std::move(hidden), classes * classes}, init_rng) {
    if (classes < 2) throw config_error("transition network: need at least 2 classes");
}

Tensor TransitionNetwork::forward(const Tensor& x) const {
    Tensor raw = net_.forward(x);  // batch x C^2
    const std::size_t batch = raw.shape()[0];
    Tensor cube = reshape(raw, {batch, classes_, classes_});
    return softmax(cube, 2);  // row-wise
}

TransitionMatrix TransitionNetwork::matrix_for(const Tensor& x_row) const {
    if (x_row.rank() != 1)
        throw dimension_error("matrix_for: expects a single instance row");
    Tensor batch = reshape(x_row, {1, x_row.shape()[0]});
    Tensor t = forward(batch);
    TransitionMatrix m;
    m.classes = classes_;
    m.entries = t.values();
    return m;
}

Tensor infer_natural_posterior(const Tensor& p_mix, const Tensor& t) {
    return posterior_compose(p_mix, t);
}

std::vector<double> anti_diagonal_identity(std::size_t classes) {
    std::vector<double> m(classes * classes, 0.0);
    for (std::size_t i = 0; i < classes; ++i) m[i * classes + (classes - 1 - i)] = 1.0;
    return m;
}

}  // namespace translab
