// NEON kernel variants (aarch64 baseline, so no special compile flags).
// Same contract as the AVX2 file: no fused multiply-add — vmlaq would emit
// fmla on aarch64, so accumulation is spelled vaddq(c, vmulq(a, b)).

#if defined(__aarch64__)

#include <arm_neon.h>

#include "pf/kernels.hpp"
#include "kernels_impl.hpp"

namespace pf::kern {
namespace {

// ---- float, 4 lanes --------------------------------------------------------

void matmul_f32(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * n;
        const float32x4_t zero = vdupq_n_f32(0.0f);
        for (std::size_t j = 0; j < n4; j += 4) vst1q_f32(crow + j, zero);
        for (std::size_t j = n4; j < n; ++j) crow[j] = 0.0f;
        const float* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float aik = arow[kk];
            const float32x4_t av = vdupq_n_f32(aik);
            const float* brow = b + kk * n;
            for (std::size_t j = 0; j < n4; j += 4) {
                float32x4_t cv = vld1q_f32(crow + j);
                cv = vaddq_f32(cv, vmulq_f32(av, vld1q_f32(brow + j)));
                vst1q_f32(crow + j, cv);
            }
            for (std::size_t j = n4; j < n; ++j) crow[j] = crow[j] + aik * brow[j];
        }
    }
}

void add_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    ref::add(a + n4, b + n4, out + n4, n - n4);
}

void sub_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        vst1q_f32(out + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    ref::sub(a + n4, b + n4, out + n4, n - n4);
}

void mul_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    ref::mul(a + n4, b + n4, out + n4, n - n4);
}

void scale_f32(const float* a, float s, float* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    const float32x4_t sv = vdupq_n_f32(s);
    for (std::size_t i = 0; i < n4; i += 4)
        vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), sv));
    ref::scale(a + n4, s, out + n4, n - n4);
}

void axpy_f32(float s, const float* x, float* y, std::size_t n) {
    std::size_t n4 = n - n % 4;
    const float32x4_t sv = vdupq_n_f32(s);
    for (std::size_t i = 0; i < n4; i += 4) {
        float32x4_t yv = vld1q_f32(y + i);
        yv = vaddq_f32(yv, vmulq_f32(sv, vld1q_f32(x + i)));
        vst1q_f32(y + i, yv);
    }
    ref::axpy(s, x + n4, y + n4, n - n4);
}

void acc_f32(const float* x, float* y, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vld1q_f32(x + i)));
    ref::acc(x + n4, y + n4, n - n4);
}

// ---- double, 2 lanes -------------------------------------------------------

void matmul_f64(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const float64x2_t zero = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < n2; j += 2) vst1q_f64(crow + j, zero);
        for (std::size_t j = n2; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const float64x2_t av = vdupq_n_f64(aik);
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n2; j += 2) {
                float64x2_t cv = vld1q_f64(crow + j);
                cv = vaddq_f64(cv, vmulq_f64(av, vld1q_f64(brow + j)));
                vst1q_f64(crow + j, cv);
            }
            for (std::size_t j = n2; j < n; ++j) crow[j] = crow[j] + aik * brow[j];
        }
    }
}

void add_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < n2; i += 2)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    ref::add(a + n2, b + n2, out + n2, n - n2);
}

void sub_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < n2; i += 2)
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    ref::sub(a + n2, b + n2, out + n2, n - n2);
}

void mul_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < n2; i += 2)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    ref::mul(a + n2, b + n2, out + n2, n - n2);
}

void scale_f64(const double* a, double s, double* out, std::size_t n) {
    std::size_t n2 = n - n % 2;
    const float64x2_t sv = vdupq_n_f64(s);
    for (std::size_t i = 0; i < n2; i += 2)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), sv));
    ref::scale(a + n2, s, out + n2, n - n2);
}

void axpy_f64(double s, const double* x, double* y, std::size_t n) {
    std::size_t n2 = n - n % 2;
    const float64x2_t sv = vdupq_n_f64(s);
    for (std::size_t i = 0; i < n2; i += 2) {
        float64x2_t yv = vld1q_f64(y + i);
        yv = vaddq_f64(yv, vmulq_f64(sv, vld1q_f64(x + i)));
        vst1q_f64(y + i, yv);
    }
    ref::axpy(s, x + n2, y + n2, n - n2);
}

void acc_f64(const double* x, double* y, std::size_t n) {
    std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < n2; i += 2)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    ref::acc(x + n2, y + n2, n - n2);
}

}  // namespace

template <typename T>
const Kernels<T>& neon_table();

template <>
const Kernels<float>& neon_table<float>() {
    static const Kernels<float> t = {
        &matmul_f32, &add_f32, &sub_f32, &mul_f32, &scale_f32, &axpy_f32, &acc_f32,
    };
    return t;
}

template <>
const Kernels<double>& neon_table<double>() {
    static const Kernels<double> t = {
        &matmul_f64, &add_f64, &sub_f64, &mul_f64, &scale_f64, &axpy_f64, &acc_f64,
    };
    return t;
}

}  // namespace pf::kern

#endif  // aarch64
