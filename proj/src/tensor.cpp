#include "translab/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "translab/errors.hpp"
#include "translab/kernels.hpp"

namespace translab {

namespace {

std::atomic<std::uint64_t> g_next_node_id{1};

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

void ensure_grad(TensorNode& n) {
    if (n.grad.size() != n.values.size()) n.grad.assign(n.values.size(), 0.0);
}

std::shared_ptr<TensorNode> new_node(std::vector<std::size_t> shape,
                                     std::vector<double> values, bool requires_grad) {
    if (values.size() != shape_numel(shape))
        throw dimension_error("tensor: " + std::to_string(values.size()) +
                              " values for shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    n->requires_grad = requires_grad;
    n->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
    if (requires_grad) n->grad.assign(n->values.size(), 0.0);
    return n;
}

bool any_requires(const std::vector<Tensor>& parents) {
    for (const auto& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw dimension_error(std::string(op) + ": shape mismatch " +
                              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_finite(const Tensor& a, const char* op) {
    for (double v : a.values())
        if (!std::isfinite(v)) throw input_error(std::string(op) + ": non-finite input");
}

}  // namespace

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << " x ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn) {
    const bool req = any_requires(parents);
    auto n = new_node(std::move(shape), std::move(values), req);
    if (req) {
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    Tensor t;
    t.node() = std::move(n);
    return t;
}

Tensor Tensor::constant(std::vector<std::size_t> shape, std::vector<double> values) {
    Tensor t;
    t.node_ = new_node(std::move(shape), std::move(values), false);
    return t;
}

Tensor Tensor::variable(std::vector<std::size_t> shape, std::vector<double> values) {
    Tensor t;
    t.node_ = new_node(std::move(shape), std::move(values), true);
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return requires_grad ? variable(std::move(shape), std::move(v))
                         : constant(std::move(shape), std::move(v));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return requires_grad ? variable({}, {v}) : constant({}, {v});
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->requires_grad)
        throw state_error("grad requested on a non-differentiable tensor");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (node_->values.size() != 1)
        throw usage_error("item() on tensor of shape " + shape_str(node_->shape));
    return node_->values[0];
}

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw dimension_error("matmul: expects rank-2 operands, got " +
                              shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t n = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], m = b.shape()[1];
    if (k != k2)
        throw dimension_error("matmul: inner extents disagree, " + shape_str(a.shape()) +
                              " vs " + shape_str(b.shape()));
    std::vector<double> out(n * m);
    kernels::matmul_nn(a.values().data(), b.values().data(), out.data(), n, k, m);
    auto an = a.node();
    auto bn = b.node();
    return make_op({n, m}, std::move(out), {a, b}, [an, bn, n, k, m](TensorNode& self) {
        if (an->requires_grad) {
            ensure_grad(*an);
            kernels::matmul_nt_acc(self.grad.data(), bn->values.data(), an->grad.data(), n, k, m);
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            kernels::matmul_tn_acc(an->values.data(), self.grad.data(), bn->grad.data(), n, k, m);
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = av[i] + bv[i]; });
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn, n](TensorNode& self) {
        if (an->requires_grad) {
            ensure_grad(*an);
            double* g = an->grad.data();
            const double* sg = self.grad.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i]; });
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            double* g = bn->grad.data();
            const double* sg = self.grad.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i]; });
        }
    });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || m.shape()[1] != v.shape()[0])
        throw dimension_error("add_rowvec: " + shape_str(m.shape()) + " vs " +
                              shape_str(v.shape()));
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(rows * cols);
    const double* mv = m.values().data();
    const double* vv = v.values().data();
    kernels::map_n(rows, [&](std::size_t r) {
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = mv[r * cols + c] + vv[c];
    });
    auto mn = m.node();
    auto vn = v.node();
    return make_op({rows, cols}, std::move(out), {m, v}, [mn, vn, rows, cols](TensorNode& self) {
        if (mn->requires_grad) {
            ensure_grad(*mn);
            double* g = mn->grad.data();
            const double* sg = self.grad.data();
            kernels::map_n(rows * cols, [&](std::size_t i) { g[i] += sg[i]; });
        }
        if (vn->requires_grad) {
            ensure_grad(*vn);
            // fixed row order keeps the reduction deterministic
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    vn->grad[c] += self.grad[r * cols + c];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = av[i] - bv[i]; });
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn, n](TensorNode& self) {
        if (an->requires_grad) {
            ensure_grad(*an);
            double* g = an->grad.data();
            const double* sg = self.grad.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i]; });
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            double* g = bn->grad.data();
            const double* sg = self.grad.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] -= sg[i]; });
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = av[i] * bv[i]; });
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn, n](TensorNode& self) {
        if (an->requires_grad) {
            ensure_grad(*an);
            double* g = an->grad.data();
            const double* sg = self.grad.data();
            const double* ov = bn->values.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i] * ov[i]; });
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            double* g = bn->grad.data();
            const double* sg = self.grad.data();
            const double* ov = an->values.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i] * ov[i]; });
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = av[i] * c; });
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, c, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        double* g = an->grad.data();
        const double* sg = self.grad.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i] * c; });
    });
}

Tensor relu(const Tensor& a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = av[i] > 0.0 ? av[i] : 0.0; });
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        double* g = an->grad.data();
        const double* sg = self.grad.data();
        const double* av = an->values.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += av[i] > 0.0 ? sg[i] : 0.0; });
    });
}

Tensor log_guarded(const Tensor& a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    kernels::map_n(n, [&](std::size_t i) { out[i] = std::log(av[i] + kLogFloor); });
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        double* g = an->grad.data();
        const double* sg = self.grad.data();
        const double* av = an->values.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i] / (av[i] + kLogFloor); });
    });
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    if (shape_numel(shape) != a.size())
        throw dimension_error("reshape: cannot view " + shape_str(a.shape()) + " as " +
                              shape_str(shape));
    auto an = a.node();
    const std::size_t n = a.size();
    return make_op(std::move(shape), a.values(), {a}, [an, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        double* g = an->grad.data();
        const double* sg = self.grad.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += sg[i]; });
    });
}

Tensor sum(const Tensor& a) {
    const double s = kernels::blocked_sum(a.values().data(), a.size());
    auto an = a.node();
    const std::size_t n = a.size();
    return make_op({}, {s}, {a}, [an, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        const double sg = self.grad[0];
        double* g = an->grad.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += sg; });
    });
}

Tensor mean(const Tensor& a) {
    const std::size_t n = a.size();
    if (n == 0) throw usage_error("mean of empty tensor");
    const double s = kernels::blocked_sum(a.values().data(), n) / static_cast<double>(n);
    auto an = a.node();
    return make_op({}, {s}, {a}, [an, n](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        const double sg = self.grad[0] / static_cast<double>(n);
        double* g = an->grad.data();
        kernels::map_n(n, [&](std::size_t i) { g[i] += sg; });
    });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
    check_finite(a, "softmax");
    if (axis >= a.rank()) throw dimension_error("softmax: axis out of range");
    // Only last-axis softmax is needed by the models; general axes reduce to
    // it by treating [outer, width] slices. Reject strided axes explicitly.
    if (axis != a.rank() - 1)
        throw dimension_error("softmax: only the last axis is supported");
    const std::size_t width = a.shape()[axis];
    const std::size_t rows = a.size() / width;
    std::vector<double> out(a.size());
    kernels::softmax_rows(a.values().data(), out.data(), rows, width);
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, rows, width](TensorNode& self) {
        if (!an->requires_grad) return;
        ensure_grad(*an);
        // dz_j = y_j * (g_j - sum_k g_k y_k), per row
        kernels::map_n(rows, [&](std::size_t r) {
            const double* y = self.values.data() + r * width;
            const double* g = self.grad.data() + r * width;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) dot += g[j] * y[j];
            double* out_g = an->grad.data() + r * width;
            for (std::size_t j = 0; j < width; ++j) out_g[j] += y[j] * (g[j] - dot);
        });
    });
}

namespace {
void check_one_hot(const Tensor& y, const char* op) {
    std::size_t ones = 0;
    for (double v : y.values()) {
        if (v == 1.0) ++ones;
        else if (v != 0.0)
            throw input_error(std::string(op) + ": one-hot vector has entry " +
                              std::to_string(v));
    }
    if (ones != 1)
        throw input_error(std::string(op) + ": one-hot vector has " + std::to_string(ones) +
                          " ones");
}
}  // namespace

Tensor cross_entropy(const Tensor& p, const Tensor& y_onehot) {
    if (p.rank() != 1 || y_onehot.rank() != 1 || p.shape() != y_onehot.shape())
        throw dimension_error("cross_entropy: " + shape_str(p.shape()) + " vs " +
                              shape_str(y_onehot.shape()));
    check_one_hot(y_onehot, "cross_entropy");
    const std::size_t n = p.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss -= y_onehot.values()[i] * std::log(p.values()[i] + kLogFloor);
    auto pn = p.node();
    auto yn = y_onehot.node();
    return make_op({}, {loss}, {p, y_onehot}, [pn, yn, n](TensorNode& self) {
        const double sg = self.grad[0];
        if (pn->requires_grad) {
            ensure_grad(*pn);
            for (std::size_t i = 0; i < n; ++i)
                pn->grad[i] -= sg * yn->values[i] / (pn->values[i] + kLogFloor);
        }
        if (yn->requires_grad) {
            ensure_grad(*yn);
            for (std::size_t i = 0; i < n; ++i)
                yn->grad[i] -= sg * std::log(pn->values[i] + kLogFloor);
        }
    });
}

Tensor cross_entropy_mean(const Tensor& p_rows, const std::vector<int>& labels) {
    if (p_rows.rank() != 2)
        throw dimension_error("cross_entropy_mean: expects rank-2, got " +
                              shape_str(p_rows.shape()));
    const std::size_t rows = p_rows.shape()[0], width = p_rows.shape()[1];
    if (labels.size() != rows)
        throw dimension_error("cross_entropy_mean: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(rows) + " rows");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= width)
            throw input_error("cross_entropy_mean: label " + std::to_string(y) +
                              " out of range");
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        loss -= std::log(p_rows.values()[r * width + labels[r]] + kLogFloor);
    loss /= static_cast<double>(rows);
    auto pn = p_rows.node();
    auto lab = labels;
    return make_op({}, {loss}, {p_rows}, [pn, lab, rows, width](TensorNode& self) {
        if (!pn->requires_grad) return;
        ensure_grad(*pn);
        const double sg = self.grad[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t idx = r * width + lab[r];
            pn->grad[idx] -= sg / (pn->values[idx] + kLogFloor);
        }
    });
}

Tensor posterior_compose(const Tensor& p, const Tensor& t) {
    // single: p [C], t [C x C]; batched: p [B x C], t [B x C x C]
    std::size_t batch, classes;
    if (p.rank() == 1 && t.rank() == 2) {
        batch = 1;
        classes = p.shape()[0];
        if (t.shape()[0] != classes || t.shape()[1] != classes)
            throw dimension_error("posterior_compose: " + shape_str(p.shape()) + " vs " +
                                  shape_str(t.shape()));
    } else if (p.rank() == 2 && t.rank() == 3) {
        batch = p.shape()[0];
        classes = p.shape()[1];
        if (t.shape()[0] != batch || t.shape()[1] != classes || t.shape()[2] != classes)
            throw dimension_error("posterior_compose: " + shape_str(p.shape()) + " vs " +
                                  shape_str(t.shape()));
    } else {
        throw dimension_error("posterior_compose: unsupported ranks " +
                              shape_str(p.shape()) + " and " + shape_str(t.shape()));
    }
    std::vector<double> out(batch * classes, 0.0);
    const double* pv = p.values().data();
    const double* tv = t.values().data();
    kernels::map_n(batch, [&](std::size_t b) {
        const double* pb = pv + b * classes;
        const double* tb = tv + b * classes * classes;
        double* ob = out.data() + b * classes;
        for (std::size_t i = 0; i < classes; ++i) {
            const double pi = pb[i];
            for (std::size_t j = 0; j < classes; ++j) ob[j] += pi * tb[i * classes + j];
        }
    });
    auto pn = p.node();
    auto tn = t.node();
    std::vector<std::size_t> out_shape =
        p.rank() == 1 ? std::vector<std::size_t>{classes}
                      : std::vector<std::size_t>{batch, classes};
    return make_op(std::move(out_shape), std::move(out), {p, t},
                   [pn, tn, batch, classes](TensorNode& self) {
                       const double* sg = self.grad.data();
                       if (pn->requires_grad) {
                           ensure_grad(*pn);
                           kernels::map_n(batch, [&](std::size_t b) {
                               const double* tb = tn->values.data() + b * classes * classes;
                               const double* gb = sg + b * classes;
                               double* pg = pn->grad.data() + b * classes;
                               for (std::size_t i = 0; i < classes; ++i) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < classes; ++j)
                                       acc += gb[j] * tb[i * classes + j];
                                   pg[i] += acc;
                               }
                           });
                       }
                       if (tn->requires_grad) {
                           ensure_grad(*tn);
                           kernels::map_n(batch, [&](std::size_t b) {
                               const double* pb = pn->values.data() + b * classes;
                               const double* gb = sg + b * classes;
                               double* tg = tn->grad.data() + b * classes * classes;
                               for (std::size_t i = 0; i < classes; ++i)
                                   for (std::size_t j = 0; j < classes; ++j)
                                       tg[i * classes + j] += pb[i] * gb[j];
                           });
                       }
                   });
}

Tensor row_select(const Tensor& y_onehot, const Tensor& t) {
    if (y_onehot.rank() != 1 || t.rank() != 2 || t.shape()[0] != y_onehot.shape()[0] ||
        t.shape()[0] != t.shape()[1])
        throw dimension_error("row_select: " + shape_str(y_onehot.shape()) + " vs " +
                              shape_str(t.shape()));
    check_one_hot(y_onehot, "row_select");
    const std::size_t classes = t.shape()[0];
    std::size_t row = 0;
    for (std::size_t i = 0; i < classes; ++i)
        if (y_onehot.values()[i] == 1.0) row = i;
    std::vector<double> out(t.values().begin() + row * classes,
                            t.values().begin() + (row + 1) * classes);
    auto tn = t.node();
    return make_op({classes}, std::move(out), {t}, [tn, row, classes](TensorNode& self) {
        if (!tn->requires_grad) return;
        ensure_grad(*tn);
        for (std::size_t j = 0; j < classes; ++j)
            tn->grad[row * classes + j] += self.grad[j];
    });
}

Tensor select_rows(const Tensor& t, const std::vector<int>& rows) {
    if (t.rank() != 3 || t.shape()[1] != t.shape()[2])
        throw dimension_error("select_rows: expects batch x C x C, got " +
                              shape_str(t.shape()));
    const std::size_t batch = t.shape()[0], classes = t.shape()[1];
    if (rows.size() != batch)
        throw dimension_error("select_rows: " + std::to_string(rows.size()) +
                              " indices for batch " + std::to_string(batch));
    for (int r : rows)
        if (r < 0 || static_cast<std::size_t>(r) >= classes)
            throw input_error("select_rows: row index " + std::to_string(r) + " out of range");
    std::vector<double> out(batch * classes);
    const double* tv = t.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = tv + (b * classes + rows[b]) * classes;
        std::copy(src, src + classes, out.data() + b * classes);
    }
    auto tn = t.node();
    auto idx = rows;
    return make_op({batch, classes}, std::move(out), {t},
                   [tn, idx, batch, classes](TensorNode& self) {
                       if (!tn->requires_grad) return;
                       ensure_grad(*tn);
                       for (std::size_t b = 0; b < batch; ++b) {
                           double* dst = tn->grad.data() + (b * classes + idx[b]) * classes;
                           const double* g = self.grad.data() + b * classes;
                           for (std::size_t j = 0; j < classes; ++j) dst[j] += g[j];
                       }
                   });
}

Tensor mse(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mse");
    const std::size_t n = a.size();
    if (n == 0) throw usage_error("mse of empty tensors");
    std::vector<double> sq(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    kernels::map_n(n, [&](std::size_t i) {
        const double d = av[i] - bv[i];
        sq[i] = d * d;
    });
    const double loss = kernels::blocked_sum(sq.data(), n) / static_cast<double>(n);
    auto an = a.node();
    auto bn = b.node();
    return make_op({}, {loss}, {a, b}, [an, bn, n](TensorNode& self) {
        const double sg = 2.0 * self.grad[0] / static_cast<double>(n);
        if (an->requires_grad) {
            ensure_grad(*an);
            double* g = an->grad.data();
            const double* x = an->values.data();
            const double* y = bn->values.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] += sg * (x[i] - y[i]); });
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            double* g = bn->grad.data();
            const double* x = an->values.data();
            const double* y = bn->values.data();
            kernels::map_n(n, [&](std::size_t i) { g[i] -= sg * (x[i] - y[i]); });
        }
    });
}

Tensor detach(const Tensor& a) {
    return Tensor::constant(a.shape(), a.values());
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw usage_error("backward: loss must be a scalar");
    if (!loss.requires_grad()) return;  // nothing differentiable upstream

    // reverse topological order via iterative post-order DFS
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    ensure_grad(*loss.node());
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

std::vector<double> one_hot(int k, std::size_t classes) {
    if (k < 0 || static_cast<std::size_t>(k) >= classes)
        throw input_error("one_hot: index " + std::to_string(k) + " out of range for " +
                          std::to_string(classes) + " classes");
    std::vector<double> v(classes, 0.0);
    v[static_cast<std::size_t>(k)] = 1.0;
    return v;
}

int argmax_row(const double* row, std::size_t width) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < width; ++j)
        if (row[j] > row[best]) best = j;
    return static_cast<int>(best);
}

}  // namespace translab
