// AVX2 kernel variants.  This is the only translation unit built with
// -mavx2; it is reached only after the dispatcher's cpuid check.  No FMA
// intrinsics appear here — multiply and add round separately so results
// match the scalar reference bitwise (see kernels.hpp).

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "pf/kernels.hpp"
#include "kernels_impl.hpp"

namespace pf::kern {
namespace {

// ---- float, 8 lanes --------------------------------------------------------

void matmul_f32(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n8 = n - n % 8;
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * n;
        const __m256 zero = _mm256_setzero_ps();
        for (std::size_t j = 0; j < n8; j += 8) _mm256_storeu_ps(crow + j, zero);
        for (std::size_t j = n8; j < n; ++j) crow[j] = 0.0f;
        const float* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float aik = arow[kk];
            const __m256 av = _mm256_set1_ps(aik);
            const float* brow = b + kk * n;
            for (std::size_t j = 0; j < n8; j += 8) {
                __m256 cv = _mm256_loadu_ps(crow + j);
                __m256 bv = _mm256_loadu_ps(brow + j);
                cv = _mm256_add_ps(cv, _mm256_mul_ps(av, bv));
                _mm256_storeu_ps(crow + j, cv);
            }
            // Tail columns advance through k in the same order as the lanes.
            for (std::size_t j = n8; j < n; ++j) crow[j] = crow[j] + aik * brow[j];
        }
    }
}

void add_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n8 = n - n % 8;
    for (std::size_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    ref::add(a + n8, b + n8, out + n8, n - n8);
}

void sub_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n8 = n - n % 8;
    for (std::size_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    ref::sub(a + n8, b + n8, out + n8, n - n8);
}

void mul_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t n8 = n - n % 8;
    for (std::size_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    ref::mul(a + n8, b + n8, out + n8, n - n8);
}

void scale_f32(const float* a, float s, float* out, std::size_t n) {
    std::size_t n8 = n - n % 8;
    const __m256 sv = _mm256_set1_ps(s);
    for (std::size_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), sv));
    ref::scale(a + n8, s, out + n8, n - n8);
}

void axpy_f32(float s, const float* x, float* y, std::size_t n) {
    std::size_t n8 = n - n % 8;
    const __m256 sv = _mm256_set1_ps(s);
    for (std::size_t i = 0; i < n8; i += 8) {
        __m256 yv = _mm256_loadu_ps(y + i);
        yv = _mm256_add_ps(yv, _mm256_mul_ps(sv, _mm256_loadu_ps(x + i)));
        _mm256_storeu_ps(y + i, yv);
    }
    ref::axpy(s, x + n8, y + n8, n - n8);
}

void acc_f32(const float* x, float* y, std::size_t n) {
    std::size_t n8 = n - n % 8;
    for (std::size_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), _mm256_loadu_ps(x + i)));
    ref::acc(x + n8, y + n8, n - n8);
}

// ---- double, 4 lanes -------------------------------------------------------

void matmul_f64(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const __m256d zero = _mm256_setzero_pd();
        for (std::size_t j = 0; j < n4; j += 4) _mm256_storeu_pd(crow + j, zero);
        for (std::size_t j = n4; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const __m256d av = _mm256_set1_pd(aik);
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                __m256d bv = _mm256_loadu_pd(brow + j);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(av, bv));
                _mm256_storeu_pd(crow + j, cv);
            }
            for (std::size_t j = n4; j < n; ++j) crow[j] = crow[j] + aik * brow[j];
        }
    }
}

void add_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::add(a + n4, b + n4, out + n4, n - n4);
}

void sub_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::sub(a + n4, b + n4, out + n4, n - n4);
}

void mul_f64(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    ref::mul(a + n4, b + n4, out + n4, n - n4);
}

void scale_f64(const double* a, double s, double* out, std::size_t n) {
    std::size_t n4 = n - n % 4;
    const __m256d sv = _mm256_set1_pd(s);
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), sv));
    ref::scale(a + n4, s, out + n4, n - n4);
}

void axpy_f64(double s, const double* x, double* y, std::size_t n) {
    std::size_t n4 = n - n % 4;
    const __m256d sv = _mm256_set1_pd(s);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_add_pd(yv, _mm256_mul_pd(sv, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, yv);
    }
    ref::axpy(s, x + n4, y + n4, n - n4);
}

void acc_f64(const double* x, double* y, std::size_t n) {
    std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    ref::acc(x + n4, y + n4, n - n4);
}

}  // namespace

template <typename T>
const Kernels<T>& avx2_table();

template <>
const Kernels<float>& avx2_table<float>() {
    static const Kernels<float> t = {
        &matmul_f32, &add_f32, &sub_f32, &mul_f32, &scale_f32, &axpy_f32, &acc_f32,
    };
    return t;
}

template <>
const Kernels<double>& avx2_table<double>() {
    static const Kernels<double> t = {
        &matmul_f64, &add_f64, &sub_f64, &mul_f64, &scale_f64, &axpy_f64, &acc_f64,
    };
    return t;
}

}  // namespace pf::kern

#endif  // x86
