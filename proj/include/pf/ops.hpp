#pragma once

// Forward tensor math.  Matrix products and elementwise arithmetic go
// through the dispatched kernels (kernels.hpp); order-sensitive reductions
// (row max/sum, softmax normalization, means) and transcendentals are
// computed scalar so results do not depend on the active SIMD variant.
//
// Shape conventions: matrices are row-major [rows x cols]; a token sequence
// is [m x D] (one row per token); vec()/kron() follow the column-major
// convention, i.e. vec stacks columns, so vec(A X B) = (B^T (x) A) vec(X).

#include <cstddef>
#include <span>
#include <vector>

#include "pf/tensor.hpp"

namespace pf {

enum class Activation { gelu, relu };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& s);

// c = a @ b, [m x k] @ [k x n] -> [m x n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Elementwise; shapes must match exactly.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);

// x [m x n] plus a length-n bias added to every row.
template <typename T>
Tensor<T> bias_add_rows(const Tensor<T>& x, const Tensor<T>& bias);

// Horizontal concatenation of matrices with equal row counts.
template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> parts);

// Row-wise softmax with the usual max-shift stabilization.  Each output row
// sums to 1 (up to rounding) and is computed scalar.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a);

// Exact GELU, x * Phi(x) with Phi via erf.  One scalar call per element.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a);
template <typename T>
Tensor<T> relu(const Tensor<T>& a);
template <typename T>
Tensor<T> apply_activation(const Tensor<T>& a, Activation act);

// Column means: [m x n] -> [1 x n].
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a);

// Row-wise standardization (x - mean) / sqrt(var + eps), no affine part.
template <typename T>
Tensor<T> layernorm_rows(const Tensor<T>& a, T eps = T(1e-5));

// Cross-entropy of a single sample straight from logits (softmax fused in,
// computed via log-sum-exp so large logits do not overflow).  Accepts a
// rank-1 [C] or rank-2 [1 x C] tensor.
template <typename T>
T cross_entropy_logits(const Tensor<T>& logits, std::size_t label);

// Index of the largest entry (first one on ties).
template <typename T>
std::size_t argmax(const Tensor<T>& logits);

template <typename T>
T sum_all(const Tensor<T>& a);

// Kronecker product of matrices: [p x q] (x) [r x s] -> [p r x q s].
template <typename T>
Tensor<T> kron(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> identity(std::size_t n);

// Column-major vectorization: stacks the columns of [m x n] into [m n].
template <typename T>
Tensor<T> vec_cols(const Tensor<T>& a);

// Inverse of vec_cols.
template <typename T>
Tensor<T> unvec_cols(const Tensor<T>& v, std::size_t m, std::size_t n);

namespace detail {

// Scalar GELU and its exact derivative; shared with the autodiff backward
// pass so forward and gradient agree to the last bit on every variant.
template <typename T>
T gelu_scalar(T x);
template <typename T>
T gelu_grad_scalar(T x);

}  // namespace detail

}  // namespace pf
