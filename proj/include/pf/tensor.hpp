#pragma once

// Dense row-major tensor over float or double.  This is deliberately a thin
// value type: shape + flat storage + bounds-checked indexing.  All math lives
// in free functions (ops.hpp) so the numeric kernels stay swappable.

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pf/errors.hpp"

namespace pf {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline const char* dtype_name(DType t) { return t == DType::f32 ? "f32" : "f64"; }
inline std::size_t dtype_size(DType t) { return t == DType::f32 ? 4 : 8; }

template <typename T>
struct dtype_of;
template <>
struct dtype_of<float> {
    static constexpr DType value = DType::f32;
};
template <>
struct dtype_of<double> {
    static constexpr DType value = DType::f64;
};

template <typename T>
class Tensor {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                  "Tensor supports float and double only");

  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), T(0));
    }

    Tensor(std::vector<std::size_t> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_))
            throw ShapeError("tensor: data size " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string());
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, T value) {
        Tensor t(std::move(shape));
        t.fill(value);
        return t;
    }

    // Row-major 2-D literal, e.g. Tensor<float>::matrix({{1, 2}, {3, 4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
        std::size_t r = rows.size();
        std::size_t c = r == 0 ? 0 : rows.begin()->size();
        Tensor t({r, c});
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
            for (T v : row) t.data_[i++] = v;
        }
        return t;
    }

    static Tensor vector1d(std::vector<T> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t extent(std::size_t axis) const {
        if (axis >= shape_.size())
            throw IndexError("tensor: axis " + std::to_string(axis) + " out of range for rank " +
                             std::to_string(rank()));
        return shape_[axis];
    }

    // Rank-2 conveniences; most of the model works with matrices.
    std::size_t rows() const { return matrix_extent(0); }
    std::size_t cols() const { return matrix_extent(1); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i) {
        check_flat(i);
        return data_[i];
    }
    T at(std::size_t i) const {
        check_flat(i);
        return data_[i];
    }

    T& at(std::size_t i, std::size_t j) { return data_[matrix_index(i, j)]; }
    T at(std::size_t i, std::size_t j) const { return data_[matrix_index(i, j)]; }

    T& at(std::size_t i, std::size_t j, std::size_t k) { return data_[cube_index(i, j, k)]; }
    T at(std::size_t i, std::size_t j, std::size_t k) const { return data_[cube_index(i, j, k)]; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    // Reinterprets the flat storage under a new shape of equal element count.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (checked_numel(shape) != size())
            throw ShapeError("reshape: element count mismatch (" + std::to_string(size()) + " elements, target " +
                             Tensor(std::move(shape)).shape_string() + ")");
        Tensor out;
        out.shape_ = std::move(shape);
        out.data_ = data_;
        return out;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    static constexpr DType dtype() { return dtype_of<T>::value; }

    std::string shape_string() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
        os << ']';
        return os.str();
    }

  private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw ShapeError("tensor: zero extent is not allowed");
            if (n > SIZE_MAX / e) throw SizeError("tensor: shape overflows size_t");
            n *= e;
        }
        return shape.empty() ? 0 : n;
    }

    std::size_t matrix_extent(std::size_t axis) const {
        if (rank() != 2) throw ShapeError("tensor: rank-2 access on rank-" + std::to_string(rank()) + " tensor");
        return shape_[axis];
    }

    std::size_t matrix_index(std::size_t i, std::size_t j) const {
        if (rank() != 2) throw ShapeError("tensor: rank-2 access on rank-" + std::to_string(rank()) + " tensor");
        if (i >= shape_[0] || j >= shape_[1])
            throw IndexError("tensor: index (" + std::to_string(i) + "," + std::to_string(j) +
                             ") out of range for " + shape_string());
        return i * shape_[1] + j;
    }

    std::size_t cube_index(std::size_t i, std::size_t j, std::size_t k) const {
        if (rank() != 3) throw ShapeError("tensor: rank-3 access on rank-" + std::to_string(rank()) + " tensor");
        if (i >= shape_[0] || j >= shape_[1] || k >= shape_[2])
            throw IndexError("tensor: index (" + std::to_string(i) + "," + std::to_string(j) + "," +
                             std::to_string(k) + ") out of range for " + shape_string());
        return (i * shape_[1] + j) * shape_[2] + k;
    }

    void check_flat(std::size_t i) const {
        if (i >= data_.size())
            throw IndexError("tensor: flat index " + std::to_string(i) + " out of range for " + shape_string());
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

// Exact bitwise comparison (distinguishes -0.0 from +0.0 and NaN payloads);
// the SIMD equivalence and determinism tests rely on this, not on ==.
template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    T worst = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        T d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > worst) worst = d;
    }
    return worst;
}

}  // namespace pf
