#include "doctest.h"

#include <array>
#include <cmath>

#include "pf/ops.hpp"
#include "pf/rng.hpp"
#include "support/oracles.hpp"

using pf::Tensor;

TEST_CASE("matmul validates shapes") {
    Tensor<float> a({2, 3}), b({4, 2});
    CHECK_THROWS_AS(pf::matmul(a, b), pf::ShapeError);
    CHECK_THROWS_AS(pf::matmul(a, Tensor<float>({3})), pf::ShapeError);
}

TEST_CASE("transpose") {
    auto a = Tensor<double>::matrix({{1, 2, 3}, {4, 5, 6}});
    auto t = pf::transpose(a);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 2);
    CHECK(t.at(2, 1) == 6.0);
    CHECK(pf::bitwise_equal(pf::transpose(t), a));
}

TEST_CASE("elementwise ops and shape enforcement") {
    auto a = Tensor<float>::matrix({{1, -2}, {3, 4}});
    auto b = Tensor<float>::matrix({{2, 0.5}, {-1, 2}});
    CHECK(pf::add(a, b).at(0, 0) == 3.0f);
    CHECK(pf::sub(a, b).at(1, 0) == 4.0f);
    CHECK(pf::hadamard(a, b).at(0, 1) == -1.0f);
    CHECK(pf::scale(a, 2.0f).at(1, 1) == 8.0f);
    CHECK_THROWS_AS(pf::add(a, Tensor<float>({2, 3})), pf::ShapeError);
}

TEST_CASE("bias_add_rows broadcasts over rows") {
    auto x = Tensor<float>::matrix({{1, 2, 3}, {4, 5, 6}});
    auto bias = Tensor<float>::vector1d({10, 20, 30});
    auto y = pf::bias_add_rows(x, bias);
    CHECK(y.at(0, 2) == 33.0f);
    CHECK(y.at(1, 0) == 14.0f);
    CHECK_THROWS_AS(pf::bias_add_rows(x, Tensor<float>::vector1d({1, 2})), pf::ShapeError);
}

TEST_CASE("concat_cols") {
    auto a = Tensor<float>::matrix({{1}, {3}});
    auto b = Tensor<float>::matrix({{2, 5}, {4, 6}});
    std::array<Tensor<float>, 2> parts{a, b};
    auto c = pf::concat_cols(std::span<const Tensor<float>>(parts));
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 3);
    CHECK(c.at(0, 1) == 2.0f);
    CHECK(c.at(1, 2) == 6.0f);
    std::array<Tensor<float>, 2> bad{a, Tensor<float>({3, 1})};
    CHECK_THROWS_AS(pf::concat_cols(std::span<const Tensor<float>>(bad)), pf::ShapeError);
}

TEST_CASE("softmax rows: uniform case, normalization, oracle agreement") {
    // Equal logits over 4 classes must give exactly 0.25 each.
    auto flat = pf::softmax_rows(Tensor<double>::matrix({{3, 3, 3, 3}}));
    for (std::size_t j = 0; j < 4; ++j) CHECK(flat.at(0, j) == 0.25);

    pf::Rng rng(11);
    auto x = oracle::random_tensor<double>(rng, {5, 9}, 3.0);
    auto y = pf::softmax_rows(x);
    auto want = oracle::softmax_rows(x);
    CHECK(pf::max_abs_diff(y, want) < 1e-14);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < y.cols(); ++j) {
            s += y.at(i, j);
            CHECK(y.at(i, j) > 0.0);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }

    // The max shift makes huge logits safe where the naive formula overflows.
    auto big = pf::softmax_rows(Tensor<double>::matrix({{1000, 999}}));
    CHECK(std::isfinite(big.at(0, 0)));
    CHECK(big.at(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("gelu matches the erf definition and has the right asymptotes") {
    CHECK(pf::gelu(Tensor<double>::vector1d({0.0}))[0] == 0.0);
    auto x = Tensor<double>::vector1d({-6.0, -1.0, -0.1, 0.3, 1.0, 6.0});
    auto y = pf::gelu(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double want = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
        CHECK(y[i] == doctest::Approx(want).epsilon(1e-14));
    }
    CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-8));   // left tail dies
    CHECK(y[5] == doctest::Approx(6.0).epsilon(1e-8));   // right tail is identity
    auto r = pf::relu(Tensor<float>::vector1d({-2.0f, 0.0f, 2.0f}));
    CHECK(r[0] == 0.0f);
    CHECK(r[2] == 2.0f);
}

TEST_CASE("mean_rows") {
    auto m = pf::mean_rows(Tensor<float>::matrix({{1, 2}, {3, 4}}));
    CHECK(m.rows() == 1);
    CHECK(m.at(0, 0) == 2.0f);
    CHECK(m.at(0, 1) == 3.0f);
}

TEST_CASE("layernorm_rows standardizes each row") {
    pf::Rng rng(3);
    auto x = oracle::random_tensor<double>(rng, {4, 16}, 5.0);
    auto y = pf::layernorm_rows(x);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double mean = 0, var = 0;
        for (std::size_t j = 0; j < y.cols(); ++j) mean += y.at(i, j);
        mean /= y.cols();
        for (std::size_t j = 0; j < y.cols(); ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
        var /= y.cols();
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("cross entropy from logits") {
    CHECK(pf::cross_entropy_logits(Tensor<double>::vector1d({0, 0}), 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Shift invariance and stability at large magnitude.
    auto a = Tensor<double>::vector1d({2.0, -1.0, 0.5});
    auto b = Tensor<double>::vector1d({102.0, 99.0, 100.5});
    CHECK(pf::cross_entropy_logits(a, 2) == doctest::Approx(pf::cross_entropy_logits(b, 2)).epsilon(1e-10));
    CHECK(std::isfinite(pf::cross_entropy_logits(Tensor<double>::vector1d({1000.0, -1000.0}), 1)));
    // Also accepts [1 x C].
    CHECK(pf::cross_entropy_logits(Tensor<double>::matrix({{0, 0}}), 1) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(pf::cross_entropy_logits(a, 3), pf::IndexError);
}

TEST_CASE("argmax takes the first maximum") {
    CHECK(pf::argmax(Tensor<float>::vector1d({1, 5, 5, 2})) == 1);
    CHECK(pf::argmax(Tensor<float>::matrix({{-3, -1, -2}})) == 1);
}

TEST_CASE("kron worked example and oracle agreement") {
    auto a = Tensor<double>::matrix({{1, 2}, {3, 4}});
    auto b = Tensor<double>::matrix({{0, 1}, {1, 0}});
    auto k = pf::kron(a, b);
    auto want = Tensor<double>::matrix({{0, 1, 0, 2}, {1, 0, 2, 0}, {0, 3, 0, 4}, {3, 0, 4, 0}});
    CHECK(pf::bitwise_equal(k, want));

    pf::Rng rng(13);
    auto p = oracle::random_tensor<double>(rng, {3, 2});
    auto q = oracle::random_tensor<double>(rng, {2, 5});
    CHECK(pf::bitwise_equal(pf::kron(p, q), oracle::kron(p, q)));
    CHECK(pf::kron(p, q).rows() == 6);
    CHECK(pf::kron(p, q).cols() == 10);
}

TEST_CASE("vec_cols is column-major and unvec inverts it") {
    auto a = Tensor<double>::matrix({{1, 2}, {3, 4}});
    auto v = pf::vec_cols(a);
    CHECK(v.rank() == 1);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 3.0);
    CHECK(v[2] == 2.0);
    CHECK(v[3] == 4.0);
    CHECK(pf::bitwise_equal(pf::unvec_cols(v, 2, 2), a));
    CHECK_THROWS_AS(pf::unvec_cols(v, 3, 2), pf::ShapeError);
}

TEST_CASE("vec(A X B) = (B^T kron A) vec(X)") {
    pf::Rng rng(29);
    auto A = oracle::random_tensor<double>(rng, {4, 3});
    auto X = oracle::random_tensor<double>(rng, {3, 5});
    auto B = oracle::random_tensor<double>(rng, {5, 2});
    auto left = pf::vec_cols(pf::matmul(pf::matmul(A, X), B));
    auto op = pf::kron(pf::transpose(B), A);
    auto right = pf::matmul(op, pf::vec_cols(X).reshaped({15, 1})).reshaped({8});
    CHECK(pf::max_abs_diff(left, right) < 1e-12);
}
