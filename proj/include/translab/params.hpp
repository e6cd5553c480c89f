#pragma once

#include <map>
#include <string>
#include <vector>

#include "translab/tensor.hpp"

namespace translab {

/// Named leaf tensors plus same-shaped momentum buffers. Iteration order is
/// lexicographic by name, so updates and checkpoints are stable.
class ParameterSet {
public:
    void insert(const std::string& name, Tensor t);

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::vector<double>& momentum(const std::string& name);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> names() const;

    template <class F>
    void for_each(F&& f) {  // f(name, tensor, momentum)
        for (auto& [name, e] : entries_) f(name, e.tensor, e.momentum);
    }
    template <class F>
    void for_each(F&& f) const {
        for (const auto& [name, e] : entries_) f(name, e.tensor, e.momentum);
    }

private:
    struct Entry {
        Tensor tensor;
        std::vector<double> momentum;
    };
    std::map<std::string, Entry> entries_;
};

/// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v;
/// grads zeroed afterwards. Throws state_error naming the parameter if its
/// gradient buffer is absent.
void sgd_step(ParameterSet& params, double lr, double momentum, double weight_decay = 0.0);

void zero_grads(ParameterSet& params);

}  // namespace translab
