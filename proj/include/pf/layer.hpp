#pragma once

// One transformer layer (attention block + FFN block, both with residuals)
// and a branch: L layers applied in sequence.  All branches in a model read
// the same embedded input; depth within a branch is the only sequencing.
//
// ghat_forward is the residual-free update: layer(x) = ghat(x) + x.  It is
// computed directly from the two block cores (never as layer(x) - x, which
// would cancel catastrophically), and the identity is itself under test.

#include "pf/attention.hpp"
#include "pf/ops.hpp"
#include "pf/tensor.hpp"

namespace pf {

template <typename T>
struct FfnWeights {
    Tensor<T> w1;  // [D x Dff]
    Tensor<T> b1;  // [Dff]
    Tensor<T> w2;  // [Dff x D]
    Tensor<T> b2;  // [D]
    void validate(std::size_t width) const;
};

template <typename T>
struct LayerWeights {
    AttnWeights<T> attn;
    FfnWeights<T> ffn;
    void validate(std::size_t width) const;
};

template <typename T>
struct BranchWeights {
    std::vector<LayerWeights<T>> layers;
    void validate(std::size_t width) const;
};

// act(x W1 + b1) W2 + b2, the FFN without its residual.
template <typename T>
Tensor<T> ffn_core(const Tensor<T>& x, const FfnWeights<T>& w, Activation act);

// ffn_core(x) + x.
template <typename T>
Tensor<T> ffn_forward(const Tensor<T>& x, const FfnWeights<T>& w, Activation act);

// Full layer: ffn_forward(mha_forward(x)).  With pre_norm, each block core
// reads a row-standardized copy of its input instead (residuals untouched);
// the flag exists for training experiments and is off everywhere results
// are compared against the closed-form path.
template <typename T>
Tensor<T> layer_forward(const Tensor<T>& x, const LayerWeights<T>& w, Activation act, bool pre_norm = false);

// Residual-free layer update, computed from the cores:
//   s_core = attention core, s = s_core + x, ghat = ffn_core(s) + s_core.
template <typename T>
Tensor<T> ghat_forward(const Tensor<T>& x, const LayerWeights<T>& w, Activation act, bool pre_norm = false);

template <typename T>
Tensor<T> branch_forward(const Tensor<T>& x0, const BranchWeights<T>& b, Activation act, bool pre_norm = false);

// Combined first-layer weight in vec space, small dims only:
//   W-hat1 = ((W1)^T (x) I_m) (W^S + I_{mD})      [(m Dff) x (m D)]
// Applied to vec(x) it reproduces vec(mha_forward(x) W1), the pre-bias input
// of the first FFN matmul.  Throws SizeError above the cap.
template <typename T>
Tensor<T> combined_first_weight(const Tensor<T>& x, const LayerWeights<T>& w, std::size_t cap = kClosedformCap);

// Random weights for tests and identity probes.
template <typename T>
LayerWeights<T> random_layer_weights(Rng& rng, std::size_t width, std::size_t ffn_width, std::size_t heads,
                                     double spread = 0.3);
template <typename T>
BranchWeights<T> random_branch_weights(Rng& rng, std::size_t layers, std::size_t width, std::size_t ffn_width,
                                       std::size_t heads, double spread = 0.3);

}  // namespace pf
