#pragma once

// Multi-head self-attention and its closed-form combined operator.
//
// For one input X [m x D], head j forms H_j = softmax(X W^Q_j (X W^K_j)^T /
// sqrt(d)) [m x m], and the block output is concat_j(H_j X W^V_j) W^O + X.
//
// Because every head's contribution is linear in X once H_j is fixed, the
// whole block (minus the residual) collapses to a single matrix acting on the
// column-major vectorization of X:
//
//   vec(concat_j(H_j X W^V_j) W^O) = W^S vec(X)
//   W^S = ((W^O)^T (x) I_m) . stack_j((W^V_j)^T (x) H_j)        [(mD) x (mD)]
//
// W^S depends on X through the attention patterns H_j, so it is a
// per-input summary, not a reusable weight; it exists for verification and
// is size-capped for that reason.

#include <cstdint>
#include <vector>

#include "pf/rng.hpp"
#include "pf/tensor.hpp"

namespace pf {

inline constexpr std::size_t kClosedformCap = 4096;  // refuse W^S above this many rows

template <typename T>
struct HeadWeights {
    Tensor<T> w_q, w_k, w_v;  // each [D x d]
};

template <typename T>
struct AttnWeights {
    std::vector<HeadWeights<T>> heads;
    Tensor<T> w_o;  // [(h d) x D]

    std::size_t width() const;     // D
    std::size_t head_dim() const;  // d
    // Throws ShapeError unless every head is [D x d] with one consistent d
    // and w_o is [(h d) x D].
    void validate() const;
};

// H_j for one head: row-stochastic [m x m].
template <typename T>
Tensor<T> head_attention_matrix(const Tensor<T>& x, const HeadWeights<T>& head);

// Attention block without the residual: concat_j(H_j X W^V_j) W^O.
template <typename T>
Tensor<T> mha_core(const Tensor<T>& x, const AttnWeights<T>& w);

// Full block with residual: mha_core(x) + x.
template <typename T>
Tensor<T> mha_forward(const Tensor<T>& x, const AttnWeights<T>& w);

// Materialize W^S for this input.  Throws SizeError if m * D > cap.
template <typename T>
Tensor<T> closedform_operator(const Tensor<T>& x, const AttnWeights<T>& w, std::size_t cap = kClosedformCap);

// Variants taking externally supplied attention matrices (one [m x m] per
// head); used to probe the identity with hand-built H.
template <typename T>
Tensor<T> mha_core_given_h(const Tensor<T>& x, const std::vector<Tensor<T>>& h, const AttnWeights<T>& w);
template <typename T>
Tensor<T> closedform_operator_given_h(const std::vector<Tensor<T>>& h, const AttnWeights<T>& w,
                                      std::size_t cap = kClosedformCap);

template <typename T>
AttnWeights<T> random_attn_weights(Rng& rng, std::size_t width, std::size_t heads, double spread = 0.3);

struct EquivalenceReport {
    std::size_t tokens = 0;
    std::size_t width = 0;
    std::size_t heads = 0;
    double max_abs_err = 0.0;
    bool pass = false;
};

// Random f64 instance at the given dims: builds W^S, applies it to vec(X),
// and compares against the ordinary stacked forward pass.
EquivalenceReport verify_closedform(std::uint64_t seed, std::size_t tokens, std::size_t width, std::size_t heads,
                                    double tolerance = 1e-8);

}  // namespace pf
