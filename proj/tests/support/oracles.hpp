#pragma once

// Independent reference implementations used as test oracles.  These are
// written from the mathematical definitions, on purpose sharing no code with
// the library, so a bug in pf::* cannot hide inside its own oracle.

#include <cmath>
#include <cstddef>
#include <vector>

#include "pf/rng.hpp"
#include "pf/tensor.hpp"

namespace oracle {

// Plain jik triple loop.  Note the accumulator still runs in ascending-k
// order, so for matching dtypes this agrees with the library bitwise.
template <typename T>
pf::Tensor<T> matmul(const pf::Tensor<T>& a, const pf::Tensor<T>& b) {
    pf::Tensor<T> c({a.rows(), b.cols()});
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            T acc = T(0);
            for (std::size_t k = 0; k < a.cols(); ++k) acc = acc + a.at(i, k) * b.at(k, j);
            c.at(i, j) = acc;
        }
    return c;
}

// Kronecker product assembled block by block from the definition.
template <typename T>
pf::Tensor<T> kron(const pf::Tensor<T>& a, const pf::Tensor<T>& b) {
    pf::Tensor<T> out({a.rows() * b.rows(), a.cols() * b.cols()});
    for (std::size_t bi = 0; bi < a.rows(); ++bi)
        for (std::size_t bj = 0; bj < a.cols(); ++bj)
            for (std::size_t i = 0; i < b.rows(); ++i)
                for (std::size_t j = 0; j < b.cols(); ++j)
                    out.at(bi * b.rows() + i, bj * b.cols() + j) = a.at(bi, bj) * b.at(i, j);
    return out;
}

// Softmax row by row, straight from the definition (no max shift; oracle
// inputs are kept small enough not to overflow).
template <typename T>
pf::Tensor<T> softmax_rows(const pf::Tensor<T>& a) {
    pf::Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T denom = T(0);
        for (std::size_t j = 0; j < a.cols(); ++j) denom += std::exp(a.at(i, j));
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = std::exp(a.at(i, j)) / denom;
    }
    return out;
}

template <typename T>
pf::Tensor<T> random_tensor(pf::Rng& rng, std::vector<std::size_t> shape, double spread = 1.0) {
    pf::Tensor<T> t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>((rng.uniform() * 2.0 - 1.0) * spread);
    return t;
}

// Central finite difference of a scalar function with respect to one slot of
// a parameter vector the caller mutates in place.
template <typename F>
double central_diff(F&& f, double* slot, double step = 1e-5) {
    const double saved = *slot;
    *slot = saved + step;
    const double hi = f();
    *slot = saved - step;
    const double lo = f();
    *slot = saved;
    return (hi - lo) / (2.0 * step);
}

// Relative error with a floor on the denominator so near-zero gradients do
// not blow the ratio up on finite-difference noise.
inline double rel_err(double analytic, double numeric) {
    double denom = std::abs(analytic) + std::abs(numeric);
    if (denom < 1e-3) denom = 1e-3;
    return std::abs(analytic - numeric) / denom;
}

}  // namespace oracle
