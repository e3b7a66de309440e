#include "pf/ops.hpp"

#include <cmath>

#include "pf/kernels.hpp"

namespace pf {

const char* activation_name(Activation a) { return a == Activation::gelu ? "gelu" : "relu"; }

Activation parse_activation(const std::string& s) {
    if (s == "gelu") return Activation::gelu;
    if (s == "relu") return Activation::relu;
    throw ConfigError("activation: unknown value '" + s + "' (expected gelu or relu)");
}

namespace {

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
    if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got rank " + std::to_string(a.rank()));
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_string() + " @ " + b.shape_string());
    Tensor<T> c({a.rows(), b.cols()});
    kern::active_table<T>().matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    require_matrix(a, "transpose");
    Tensor<T> out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> out(a.shape());
    kern::active_table<T>().add(a.data(), b.data(), out.data(), a.size());
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "sub");
    Tensor<T> out(a.shape());
    kern::active_table<T>().sub(a.data(), b.data(), out.data(), a.size());
    return out;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "hadamard");
    Tensor<T> out(a.shape());
    kern::active_table<T>().mul(a.data(), b.data(), out.data(), a.size());
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out(a.shape());
    kern::active_table<T>().scale(a.data(), s, out.data(), a.size());
    return out;
}

template <typename T>
Tensor<T> bias_add_rows(const Tensor<T>& x, const Tensor<T>& bias) {
    require_matrix(x, "bias_add_rows");
    if (bias.rank() != 1 || bias.size() != x.cols())
        throw ShapeError("bias_add_rows: bias " + bias.shape_string() + " does not match row width of " +
                         x.shape_string());
    Tensor<T> out(x.shape());
    const auto& k = kern::active_table<T>();
    for (std::size_t i = 0; i < x.rows(); ++i)
        k.add(x.data() + i * x.cols(), bias.data(), out.data() + i * x.cols(), x.cols());
    return out;
}

template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
    std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        require_matrix(p, "concat_cols");
        if (p.rows() != rows)
            throw ShapeError("concat_cols: row count mismatch, " + std::to_string(p.rows()) + " vs " +
                             std::to_string(rows));
        cols += p.cols();
    }
    Tensor<T> out({rows, cols});
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(), out.data() + i * cols + off);
        off += p.cols();
    }
    return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
    require_matrix(a, "softmax_rows");
    Tensor<T> out(a.shape());
    const std::size_t n = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const T* row = a.data() + i * n;
        T* orow = out.data() + i * n;
        T mx = row[0];
        for (std::size_t j = 1; j < n; ++j)
            if (row[j] > mx) mx = row[j];
        T sum = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum = sum + orow[j];
        }
        for (std::size_t j = 0; j < n; ++j) orow[j] = orow[j] / sum;
    }
    return out;
}

namespace detail {

template <typename T>
T gelu_scalar(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
}

// d/dx [x Phi(x)] = Phi(x) + x phi(x).
template <typename T>
T gelu_grad_scalar(T x) {
    T phi = std::exp(T(-0.5) * x * x) * T(0.3989422804014326779);  // 1/sqrt(2 pi)
    T Phi = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
    return Phi + x * phi;
}

template float gelu_scalar<float>(float);
template double gelu_scalar<double>(double);
template float gelu_grad_scalar<float>(float);
template double gelu_grad_scalar<double>(double);

}  // namespace detail

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = detail::gelu_scalar(a[i]);
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > T(0) ? a[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> apply_activation(const Tensor<T>& a, Activation act) {
    return act == Activation::gelu ? gelu(a) : relu(a);
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a) {
    require_matrix(a, "mean_rows");
    Tensor<T> out({std::size_t(1), a.cols()});
    const T inv = T(1) / static_cast<T>(a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        T s = T(0);
        for (std::size_t i = 0; i < a.rows(); ++i) s = s + a.at(i, j);
        out[j] = s * inv;
    }
    return out;
}

template <typename T>
Tensor<T> layernorm_rows(const Tensor<T>& a, T eps) {
    require_matrix(a, "layernorm_rows");
    Tensor<T> out(a.shape());
    const std::size_t n = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const T* row = a.data() + i * n;
        T* orow = out.data() + i * n;
        T mean = T(0);
        for (std::size_t j = 0; j < n; ++j) mean = mean + row[j];
        mean = mean / static_cast<T>(n);
        T var = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            T d = row[j] - mean;
            var = var + d * d;
        }
        var = var / static_cast<T>(n);
        T inv = T(1) / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) orow[j] = (row[j] - mean) * inv;
    }
    return out;
}

namespace {

template <typename T>
const T* flat_logits(const Tensor<T>& logits, const char* op) {
    if (logits.rank() == 1) return logits.data();
    if (logits.rank() == 2 && logits.rows() == 1) return logits.data();
    throw ShapeError(std::string(op) + ": expected [C] or [1 x C] logits, got " + logits.shape_string());
}

}  // namespace

template <typename T>
T cross_entropy_logits(const Tensor<T>& logits, std::size_t label) {
    const T* z = flat_logits(logits, "cross_entropy_logits");
    const std::size_t c = logits.size();
    if (label >= c)
        throw IndexError("cross_entropy_logits: label " + std::to_string(label) + " out of range for " +
                         std::to_string(c) + " classes");
    T mx = z[0];
    for (std::size_t j = 1; j < c; ++j)
        if (z[j] > mx) mx = z[j];
    T sum = T(0);
    for (std::size_t j = 0; j < c; ++j) sum = sum + std::exp(z[j] - mx);
    return std::log(sum) + mx - z[label];
}

template <typename T>
std::size_t argmax(const Tensor<T>& logits) {
    const T* z = flat_logits(logits, "argmax");
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j)
        if (z[j] > z[best]) best = j;
    return best;
}

template <typename T>
T sum_all(const Tensor<T>& a) {
    T s = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) s = s + a[i];
    return s;
}

template <typename T>
Tensor<T> kron(const Tensor<T>& a, const Tensor<T>& b) {
    require_matrix(a, "kron");
    require_matrix(b, "kron");
    const std::size_t p = a.rows(), q = a.cols(), r = b.rows(), s = b.cols();
    Tensor<T> out({p * r, q * s});
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) {
            const T aij = a.at(i, j);
            for (std::size_t ii = 0; ii < r; ++ii)
                for (std::size_t jj = 0; jj < s; ++jj) out.at(i * r + ii, j * s + jj) = aij * b.at(ii, jj);
        }
    return out;
}

template <typename T>
Tensor<T> identity(std::size_t n) {
    Tensor<T> out({n, n});
    for (std::size_t i = 0; i < n; ++i) out.at(i, i) = T(1);
    return out;
}

template <typename T>
Tensor<T> vec_cols(const Tensor<T>& a) {
    require_matrix(a, "vec_cols");
    Tensor<T> out({a.rows() * a.cols()});
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) out[j * a.rows() + i] = a.at(i, j);
    return out;
}

template <typename T>
Tensor<T> unvec_cols(const Tensor<T>& v, std::size_t m, std::size_t n) {
    if (v.rank() != 1 || v.size() != m * n)
        throw ShapeError("unvec_cols: expected a vector of " + std::to_string(m * n) + " elements, got " +
                         v.shape_string());
    Tensor<T> out({m, n});
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) out.at(i, j) = v[j * m + i];
    return out;
}

#define PF_INSTANTIATE_OPS(T)                                                       \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);               \
    template Tensor<T> transpose<T>(const Tensor<T>&);                              \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> hadamard<T>(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                               \
    template Tensor<T> bias_add_rows<T>(const Tensor<T>&, const Tensor<T>&);        \
    template Tensor<T> concat_cols<T>(std::span<const Tensor<T>>);                  \
    template Tensor<T> softmax_rows<T>(const Tensor<T>&);                           \
    template Tensor<T> gelu<T>(const Tensor<T>&);                                   \
    template Tensor<T> relu<T>(const Tensor<T>&);                                   \
    template Tensor<T> apply_activation<T>(const Tensor<T>&, Activation);           \
    template Tensor<T> mean_rows<T>(const Tensor<T>&);                              \
    template Tensor<T> layernorm_rows<T>(const Tensor<T>&, T);                      \
    template T cross_entropy_logits<T>(const Tensor<T>&, std::size_t);              \
    template std::size_t argmax<T>(const Tensor<T>&);                               \
    template T sum_all<T>(const Tensor<T>&);                                        \
    template Tensor<T> kron<T>(const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> identity<T>(std::size_t);                                    \
    template Tensor<T> vec_cols<T>(const Tensor<T>&);                               \
    template Tensor<T> unvec_cols<T>(const Tensor<T>&, std::size_t, std::size_t);

PF_INSTANTIATE_OPS(float)
PF_INSTANTIATE_OPS(double)

#undef PF_INSTANTIATE_OPS

}  // namespace pf
