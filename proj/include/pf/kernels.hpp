#pragma once

// Numeric kernels with interchangeable implementations.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2 on x86-64, NEON on aarch64) selected at runtime from a function
// table.  The variants are bitwise-equivalent, not merely close:
//
//   - multiply and add stay separate instructions (no FMA intrinsics, and
//     the whole project builds with -ffp-contract=off), so scalar and SIMD
//     code round at the same points;
//   - matmul accumulates every output element in ascending-k order in all
//     variants; SIMD parallelism runs across independent output columns,
//     never across the reduction;
//   - anything order-sensitive that cannot keep one element per lane (row
//     sums, transcendentals) is not in this table at all and is computed
//     scalar by ops.cpp.
//
// The active variant is auto-detected, can be pinned with the PF_ISA
// environment variable ("scalar", "avx2", "neon"), and can be switched
// programmatically with force() — the equivalence tests run every kernel
// under each supported ISA and assert bitwise-identical output.

#include <cstddef>

namespace pf::kern {

enum class Isa { scalar, avx2, neon };

const char* name(Isa isa);
bool supported(Isa isa);

// Currently selected variant (auto-detected on first use, honoring PF_ISA).
Isa active();

// Pin the active variant; throws ConfigError if unsupported on this machine.
void force(Isa isa);

// Return to auto-detection (used by tests that force ISAs).
void reset();

template <typename T>
struct Kernels {
    // c = a @ b for row-major a [m x k], b [k x n], c [m x n]; c is overwritten.
    void (*matmul)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
    // Elementwise over n contiguous values.
    void (*add)(const T* a, const T* b, T* out, std::size_t n);
    void (*sub)(const T* a, const T* b, T* out, std::size_t n);
    void (*mul)(const T* a, const T* b, T* out, std::size_t n);
    void (*scale)(const T* a, T s, T* out, std::size_t n);  // out = a * s
    void (*axpy)(T s, const T* x, T* y, std::size_t n);     // y += s * x
    void (*acc)(const T* x, T* y, std::size_t n);           // y += x
};

// Table for an explicit variant; throws ConfigError if unsupported here.
template <typename T>
const Kernels<T>& table(Isa isa);

// Table for the active variant.
template <typename T>
const Kernels<T>& active_table();

}  // namespace pf::kern
