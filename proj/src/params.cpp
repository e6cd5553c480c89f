#include "translab/params.hpp"

#include <algorithm>

#include "translab/errors.hpp"

namespace translab {

void ParameterSet::insert(const std::string& name, Tensor t) {
    if (!t.defined() || !t.requires_grad())
        throw usage_error("parameter '" + name + "' must be a differentiable leaf");
    if (entries_.count(name))
        throw usage_error("parameter '" + name + "' already present");
    Entry e;
    e.momentum.assign(t.size(), 0.0);
    e.tensor = std::move(t);
    entries_.emplace(name, std::move(e));
}

Tensor& ParameterSet::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw state_error("unknown parameter '" + name + "'");
    return it->second.tensor;
}

const Tensor& ParameterSet::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw state_error("unknown parameter '" + name + "'");
    return it->second.tensor;
}

std::vector<double>& ParameterSet::momentum(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw state_error("unknown parameter '" + name + "'");
    return it->second.momentum;
}

std::vector<std::string> ParameterSet::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

void sgd_step(ParameterSet& params, double lr, double momentum, double weight_decay) {
    params.for_each([&](const std::string& name, Tensor& t, std::vector<double>& v) {
        auto& node = *t.node();
        if (node.grad.size() != node.values.size())
            throw state_error("sgd_step: gradient missing for parameter '" + name + "'");
        auto& w = node.values;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = node.grad[i] + weight_decay * w[i];
            v[i] = momentum * v[i] + g;
            w[i] -= lr * v[i];
        }
        std::fill(node.grad.begin(), node.grad.end(), 0.0);
    });
}

void zero_grads(ParameterSet& params) {
    params.for_each([](const std::string&, Tensor& t, std::vector<double>&) {
        t.zero_grad();
    });
}

}  // namespace translab
