#include "pf/autodiff.hpp"

#include <cmath>

#include "pf/kernels.hpp"

namespace pf {

template <typename T>
typename Tape<T>::Var Tape<T>::push(Node&& n) {
    n.grad = Tensor<T>(n.value.shape());
    n.work = Tensor<T>(n.value.shape());
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw IndexError("tape: variable id " + std::to_string(v.id) + " is not on this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
    return const_cast<Tape*>(this)->node(v);
}

template <typename T>
typename Tape<T>::Var Tape<T>::input(const Tensor<T>& value) {
    Node n;
    n.value = value;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::param(const Tensor<T>& value, Tensor<T>* sink) {
    if (sink == nullptr) throw ConfigError("tape: param() needs a gradient sink, use input() for data");
    if (!sink->same_shape(value))
        throw ShapeError("tape: gradient sink shape " + sink->shape_string() + " does not match value " +
                         value.shape_string());
    Node n;
    n.value = value;
    n.sink = sink;
    return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
    return node(v).value;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
    return node(v).grad;
}

template <typename T>
typename Tape<T>::Var Tape<T>::matmul(Var a, Var b) {
    Node n;
    n.value = pf::matmul(value(a), value(b));
    n.op = Op::matmul;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::add(Var a, Var b) {
    Node n;
    n.value = pf::add(value(a), value(b));
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::sub(Var a, Var b) {
    Node n;
    n.value = pf::sub(value(a), value(b));
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::hadamard(Var a, Var b) {
    Node n;
    n.value = pf::hadamard(value(a), value(b));
    n.op = Op::hadamard;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::scale(Var a, T s) {
    Node n;
    n.value = pf::scale(value(a), s);
    n.op = Op::scale_op;
    n.a = a.id;
    n.scalar = s;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::transpose(Var a) {
    Node n;
    n.value = pf::transpose(value(a));
    n.op = Op::transpose_op;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::bias_add_rows(Var x, Var bias) {
    Node n;
    n.value = pf::bias_add_rows(value(x), value(bias));
    n.op = Op::bias_rows;
    n.a = x.id;
    n.b = bias.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("tape: concat_cols of nothing");
    std::vector<Tensor<T>> values;
    values.reserve(parts.size());
    for (Var p : parts) values.push_back(value(p));
    Node n;
    n.value = pf::concat_cols(std::span<const Tensor<T>>(values));
    n.op = Op::concat;
    n.a = parts[0].id;
    if (parts.size() > 1) n.b = parts[1].id;
    for (std::size_t i = 2; i < parts.size(); ++i) n.rest.push_back(parts[i].id);
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::softmax_rows(Var a) {
    Node n;
    n.value = pf::softmax_rows(value(a));
    n.op = Op::softmax;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::activation(Var a, Activation act) {
    Node n;
    n.value = pf::apply_activation(value(a), act);
    n.op = Op::act;
    n.a = a.id;
    n.activation = act;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::layernorm_rows(Var a) {
    Node n;
    n.value = pf::layernorm_rows(value(a));
    n.op = Op::layernorm;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::mean_rows(Var a) {
    Node n;
    n.value = pf::mean_rows(value(a));
    n.op = Op::mean_over_rows;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::reshape(Var a, std::vector<std::size_t> shape) {
    Node n;
    n.value = value(a).reshaped(std::move(shape));
    n.op = Op::reshape_op;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::sum(Var a) {
    Node n;
    n.value = Tensor<T>::vector1d({sum_all(value(a))});
    n.op = Op::sum_op;
    n.a = a.id;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::cross_entropy(Var logits, std::size_t label) {
    Node n;
    n.value = Tensor<T>::vector1d({cross_entropy_logits(value(logits), label)});
    n.op = Op::xent;
    n.a = logits.id;
    n.label = label;
    return push(std::move(n));
}

template <typename T>
Tensor<T>& Tape<T>::work_buffer(std::int32_t id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.work_touched) {
        n.work.fill(T(0));
        n.work_touched = true;
    }
    return n.work;
}

template <typename T>
void Tape<T>::accumulate(std::int32_t id, const Tensor<T>& delta) {
    Tensor<T>& g = work_buffer(id);
    kern::active_table<T>().acc(delta.data(), g.data(), g.size());
}

template <typename T>
void Tape<T>::backward(Var loss, T seed) {
    Node& top = node(loss);
    if (top.value.size() != 1)
        throw ShapeError("tape: backward needs a scalar loss, got " + top.value.shape_string());
    // Each sweep propagates through the transient work buffers and then adds
    // its result onto the persistent gradients, so repeated sweeps add
    // exactly one contribution each instead of compounding.
    for (std::int32_t id = 0; id <= loss.id; ++id) nodes_[static_cast<std::size_t>(id)].work_touched = false;
    work_buffer(loss.id)[0] += seed;
    for (std::int32_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.work_touched) continue;  // not reachable from the loss
        backward_one(n);
        kern::active_table<T>().acc(n.work.data(), n.grad.data(), n.grad.size());
        if (n.sink != nullptr) kern::active_table<T>().acc(n.work.data(), n.sink->data(), n.work.size());
    }
}

template <typename T>
void Tape<T>::backward_one(Node& n) {
    const Tensor<T>& g = n.work;
    switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            const Tensor<T>& av = nodes_[n.a].value;
            const Tensor<T>& bv = nodes_[n.b].value;
            accumulate(n.a, pf::matmul(g, pf::transpose(bv)));
            accumulate(n.b, pf::matmul(pf::transpose(av), g));
            break;
        }
        case Op::add:
            accumulate(n.a, g);
            accumulate(n.b, g);
            break;
        case Op::sub: {
            accumulate(n.a, g);
            Tensor<T>& gb = work_buffer(n.b);
            kern::active_table<T>().axpy(T(-1), g.data(), gb.data(), gb.size());
            break;
        }
        case Op::hadamard:
            accumulate(n.a, pf::hadamard(g, nodes_[n.b].value));
            accumulate(n.b, pf::hadamard(g, nodes_[n.a].value));
            break;
        case Op::scale_op: {
            Tensor<T>& ga = work_buffer(n.a);
            kern::active_table<T>().axpy(n.scalar, g.data(), ga.data(), ga.size());
            break;
        }
        case Op::transpose_op:
            accumulate(n.a, pf::transpose(g));
            break;
        case Op::bias_rows: {
            accumulate(n.a, g);
            Tensor<T>& gb = work_buffer(n.b);
            const std::size_t cols = gb.size();
            for (std::size_t i = 0; i < g.rows(); ++i)
                kern::active_table<T>().acc(g.data() + i * cols, gb.data(), cols);
            break;
        }
        case Op::concat: {
            std::vector<std::int32_t> parts{n.a};
            if (n.b >= 0) parts.push_back(n.b);
            for (auto id : n.rest) parts.push_back(id);
            std::size_t off = 0;
            for (auto pid : parts) {
                Tensor<T>& gp = work_buffer(pid);
                const std::size_t pc = gp.cols();
                for (std::size_t i = 0; i < gp.rows(); ++i)
                    kern::active_table<T>().acc(g.data() + i * g.cols() + off, gp.data() + i * pc, pc);
                off += pc;
            }
            break;
        }
        case Op::softmax: {
            // dx = y * (g - <g, y>) per row.
            const Tensor<T>& y = n.value;
            Tensor<T> dx(y.shape());
            const std::size_t cols = y.cols();
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const T* yr = y.data() + i * cols;
                const T* gr = g.data() + i * cols;
                T dot = T(0);
                for (std::size_t j = 0; j < cols; ++j) dot = dot + gr[j] * yr[j];
                T* dr = dx.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) dr[j] = yr[j] * (gr[j] - dot);
            }
            accumulate(n.a, dx);
            break;
        }
        case Op::act: {
            const Tensor<T>& x = nodes_[n.a].value;
            Tensor<T> dx(x.shape());
            if (n.activation == Activation::gelu) {
                for (std::size_t i = 0; i < x.size(); ++i) dx[i] = g[i] * detail::gelu_grad_scalar(x[i]);
            } else {
                for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? g[i] : T(0);
            }
            accumulate(n.a, dx);
            break;
        }
        case Op::layernorm: {
            // y = (x - mu) * s with s = 1/sqrt(var + eps);
            // dx = s * (g - mean(g) - y * mean(g * y)) per row.
            const Tensor<T>& x = nodes_[n.a].value;
            const Tensor<T>& y = n.value;
            Tensor<T> dx(x.shape());
            const std::size_t cols = x.cols();
            const T eps = T(1e-5);
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const T* xr = x.data() + i * cols;
                const T* yr = y.data() + i * cols;
                const T* gr = g.data() + i * cols;
                T mean = T(0), var = T(0);
                for (std::size_t j = 0; j < cols; ++j) mean = mean + xr[j];
                mean = mean / static_cast<T>(cols);
                for (std::size_t j = 0; j < cols; ++j) {
                    T d = xr[j] - mean;
                    var = var + d * d;
                }
                var = var / static_cast<T>(cols);
                const T s = T(1) / std::sqrt(var + eps);
                T gmean = T(0), gymean = T(0);
                for (std::size_t j = 0; j < cols; ++j) {
                    gmean = gmean + gr[j];
                    gymean = gymean + gr[j] * yr[j];
                }
                gmean = gmean / static_cast<T>(cols);
                gymean = gymean / static_cast<T>(cols);
                T* dr = dx.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) dr[j] = s * (gr[j] - gmean - yr[j] * gymean);
            }
            accumulate(n.a, dx);
            break;
        }
        case Op::mean_over_rows: {
            const Tensor<T>& x = nodes_[n.a].value;
            Tensor<T> dx(x.shape());
            const T inv = T(1) / static_cast<T>(x.rows());
            const std::size_t cols = x.cols();
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j) dx.data()[i * cols + j] = g[j] * inv;
            accumulate(n.a, dx);
            break;
        }
        case Op::reshape_op:
            accumulate(n.a, g.reshaped(nodes_[n.a].value.shape()));
            break;
        case Op::sum_op: {
            const Tensor<T>& x = nodes_[n.a].value;
            accumulate(n.a, Tensor<T>::full(x.shape(), g[0]));
            break;
        }
        case Op::xent: {
            // d/dz of (logsumexp(z) - z[label]) is softmax(z) - onehot(label).
            const Tensor<T>& z = nodes_[n.a].value;
            Tensor<T> dx(z.shape());
            const T* zp = z.data();
            const std::size_t c = z.size();
            T mx = zp[0];
            for (std::size_t j = 1; j < c; ++j)
                if (zp[j] > mx) mx = zp[j];
            T denom = T(0);
            for (std::size_t j = 0; j < c; ++j) denom = denom + std::exp(zp[j] - mx);
            const T g0 = g[0];
            for (std::size_t j = 0; j < c; ++j) {
                T p = std::exp(zp[j] - mx) / denom;
                dx[j] = g0 * (p - (j == n.label ? T(1) : T(0)));
            }
            accumulate(n.a, dx);
            break;
        }
    }
}

template <typename T>
void Tape<T>::zero_grad() {
    for (Node& n : nodes_) n.grad.fill(T(0));
}

template <typename T>
void Tape<T>::clear() {
    nodes_.clear();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace pf
