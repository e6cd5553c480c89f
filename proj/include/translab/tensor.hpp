#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace translab {

// Floor added inside logs so attacks that drive probabilities to exact zero
// cannot produce -inf.
inline constexpr double kLogFloor = 1e-12;

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated only for differentiable nodes
    bool requires_grad = false;
    std::uint64_t id = 0;  // creation order within the process
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;  // accumulates into parents
};

/// Dense double-precision tensor handle with tape-style reverse-mode
/// autodiff. Handles share the underlying node; recording happens on forward
/// construction, backward() replays the tape in reverse creation order.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor variable(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    std::uint64_t node_id() const { return node_->id; }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& values() const { return node_->values; }
    /// Mutable access for leaves (parameters, attack iterates). Mutating a
    /// non-leaf invalidates recorded gradients; callers only touch leaves.
    std::vector<double>& values_mut() { return node_->values; }

    const std::vector<double>& grad() const;
    void zero_grad();

    double item() const;  // scalar value

    std::shared_ptr<TensorNode>& node() { return node_; }
    const std::shared_ptr<TensorNode>& node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<TensorNode> node_;

    friend Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
                          std::vector<Tensor> parents,
                          std::function<void(TensorNode&)> backward_fn);
};

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn);

std::string shape_str(const std::vector<std::size_t>& s);

// ---- differentiable operations ------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// batch x n plus length-n row vector, broadcast over rows (bias add)
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
// log(x + kLogFloor)
Tensor log_guarded(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// softmax along `axis` with max subtraction; rejects non-finite input
Tensor softmax(const Tensor& a, std::size_t axis);
// -sum_i y_i log(p_i + eta) for a probability vector and a one-hot target
Tensor cross_entropy(const Tensor& p, const Tensor& y_onehot);
// mean over rows of -log(P[r, labels[r]] + eta)
Tensor cross_entropy_mean(const Tensor& p_rows, const std::vector<int>& labels);
// out[j] = sum_i p[i] T[i,j]  (T^T p); batched: p batch x C, T batch x C x C
Tensor posterior_compose(const Tensor& p, const Tensor& t);
// row y of T selected by a one-hot vector; shares the contract of
// posterior_compose at one-hot inputs but is implemented independently
Tensor row_select(const Tensor& y_onehot, const Tensor& t);
// batched row selection by index: T batch x C x C -> batch x C
Tensor select_rows(const Tensor& t, const std::vector<int>& rows);
// mean over all entries of (a - b)^2
Tensor mse(const Tensor& a, const Tensor& b);
// value copy that blocks gradient flow
Tensor detach(const Tensor& a);

/// Reverse pass from a scalar loss; every differentiable ancestor's grad
/// accumulates d loss / d node (additively across uses and across calls).
void backward(const Tensor& loss);

// convenience
std::vector<double> one_hot(int k, std::size_t classes);
int argmax_row(const double* row, std::size_t width);  // ties -> lowest index

}  // namespace translab
