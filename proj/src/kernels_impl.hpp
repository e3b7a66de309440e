#pragma once

// Scalar reference kernels, shared between the scalar table and the SIMD
// translation units (which reuse them for loop remainders so the tail
// elements see exactly the same operation sequence as the reference).

#include <algorithm>
#include <cstddef>

namespace pf::kern::ref {

// ikj loop order with the output row as accumulator: c[i][j] gathers its
// products in ascending-k order, which is the order the SIMD variants must
// reproduce lane-for-lane.
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        std::fill(crow, crow + n, T(0));
        const T* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            T aik = arow[kk];
            const T* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + aik * brow[j];
        }
    }
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale(const T* a, T s, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

template <typename T>
void axpy(T s, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + s * x[i];
}

template <typename T>
void acc(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + x[i];
}

}  // namespace pf::kern::ref
