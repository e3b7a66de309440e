#pragma once

// Reverse-mode automatic differentiation on a tape.
//
// A Tape owns a growing list of nodes; every operation records its inputs
// and enough payload to run its vector-Jacobian product later.  backward()
// walks the tape once in reverse creation order (creation order is already
// topological) and *accumulates* into each node's gradient — running
// backward twice doubles gradients by design, and zero_grad() is explicit.
//
// Leaves come in two kinds: input() for data the loss is not differentiated
// against, and param() which additionally accumulates its gradient into an
// external sink tensor the optimizer reads.  One tape per training thread;
// a tape is not safe for concurrent mutation.

#include <cstdint>
#include <vector>

#include "pf/ops.hpp"
#include "pf/tensor.hpp"

namespace pf {

template <typename T>
class Tape {
  public:
    struct Var {
        std::int32_t id = -1;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Data leaf; the tensor is copied onto the tape.
    Var input(const Tensor<T>& value);

    // Parameter leaf; after backward(), the gradient is also accumulated
    // into *sink (which must match the value's shape and outlive the tape).
    Var param(const Tensor<T>& value, Tensor<T>* sink);

    const Tensor<T>& value(Var v) const;
    const Tensor<T>& grad(Var v) const;

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, T s);
    Var transpose(Var a);
    Var bias_add_rows(Var x, Var bias);
    Var concat_cols(const std::vector<Var>& parts);
    Var softmax_rows(Var a);
    Var activation(Var a, Activation act);
    Var layernorm_rows(Var a);
    Var mean_rows(Var a);
    Var reshape(Var a, std::vector<std::size_t> shape);
    Var sum(Var a);  // [1]
    // Cross-entropy of one sample with softmax fused in; logits [C] or [1 x C].
    Var cross_entropy(Var logits, std::size_t label);  // [1]

    // Seeds d(loss)/d(loss) = seed and accumulates gradients down the tape;
    // loss must hold exactly one element.  seed != 1 is how a mean over a
    // batch is folded in without a per-sample scale node.
    void backward(Var loss, T seed = T(1));

    // Clears gradient *contents* (lazily), keeps the graph.
    void zero_grad();

    // Drops the whole graph, retaining buffers' capacity for reuse.
    void clear();

    std::size_t node_count() const { return nodes_.size(); }

  private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        add,
        sub,
        hadamard,
        scale_op,
        transpose_op,
        bias_rows,
        concat,
        softmax,
        act,
        layernorm,
        mean_over_rows,
        reshape_op,
        sum_op,
        xent,
    };

    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // persistent accumulator exposed via grad()
        Tensor<T> work;  // per-sweep propagation buffer
        Tensor<T>* sink = nullptr;
        std::int32_t a = -1;
        std::int32_t b = -1;
        std::vector<std::int32_t> rest;  // concat parts beyond the first two
        Op op = Op::leaf;
        bool work_touched = false;
        T scalar = T(0);
        std::size_t label = 0;
        Activation activation = Activation::gelu;
    };

    Var push(Node&& n);
    Node& node(Var v);
    const Node& node(Var v) const;
    // Sweep buffer of node id, zero-filled on first touch of this sweep.
    Tensor<T>& work_buffer(std::int32_t id);
    void accumulate(std::int32_t id, const Tensor<T>& delta);
    void backward_one(Node& n);

    std::vector<Node> nodes_;
};

}  // namespace pf
