#include "doctest.h"

#include <cstdlib>
#include <vector>

#include "pf/kernels.hpp"
#include "pf/ops.hpp"
#include "pf/rng.hpp"
#include "pf/tensor.hpp"
#include "support/oracles.hpp"

using pf::Tensor;
namespace kern = pf::kern;

namespace {

std::vector<kern::Isa> supported_isas() {
    std::vector<kern::Isa> out{kern::Isa::scalar};
    if (kern::supported(kern::Isa::avx2)) out.push_back(kern::Isa::avx2);
    if (kern::supported(kern::Isa::neon)) out.push_back(kern::Isa::neon);
    return out;
}

struct IsaGuard {
    ~IsaGuard() { kern::reset(); }
};

}  // namespace

TEST_CASE("worked matmul example") {
    IsaGuard guard;
    auto a = Tensor<float>::matrix({{1, 2}, {3, 4}});
    auto b = Tensor<float>::matrix({{1}, {1}});
    for (auto isa : supported_isas()) {
        kern::force(isa);
        auto c = pf::matmul(a, b);
        CHECK(c.rows() == 2);
        CHECK(c.cols() == 1);
        CHECK(c.at(0, 0) == 3.0f);
        CHECK(c.at(1, 0) == 7.0f);
    }
}

TEST_CASE_TEMPLATE("matmul agrees with the triple-loop oracle on every variant", T, float, double) {
    IsaGuard guard;
    pf::Rng rng(321);
    // Sizes straddle the SIMD widths so main loops and tails are both hit.
    const std::size_t dims[] = {1, 2, 3, 5, 8, 9, 16, 17};
    for (std::size_t m : dims)
        for (std::size_t k : {std::size_t(1), std::size_t(3), std::size_t(8), std::size_t(13)})
            for (std::size_t n : dims) {
                auto a = oracle::random_tensor<T>(rng, {m, k});
                auto b = oracle::random_tensor<T>(rng, {k, n});
                auto want = oracle::matmul(a, b);
                for (auto isa : supported_isas()) {
                    kern::force(isa);
                    auto got = pf::matmul(a, b);
                    REQUIRE_MESSAGE(pf::bitwise_equal(got, want),
                                    "matmul " << m << "x" << k << "x" << n << " on " << kern::name(isa));
                }
            }
}

TEST_CASE_TEMPLATE("elementwise kernels are bitwise identical across variants", T, float, double) {
    IsaGuard guard;
    pf::Rng rng(77);
    for (std::size_t n : {std::size_t(1), std::size_t(7), std::size_t(8), std::size_t(9), std::size_t(64),
                          std::size_t(100), std::size_t(1000)}) {
        auto a = oracle::random_tensor<T>(rng, {n});
        auto b = oracle::random_tensor<T>(rng, {n});
        const T s = static_cast<T>(0.37);

        kern::force(kern::Isa::scalar);
        auto add_ref = pf::add(a, b);
        auto sub_ref = pf::sub(a, b);
        auto mul_ref = pf::hadamard(a, b);
        auto scale_ref = pf::scale(a, s);

        for (auto isa : supported_isas()) {
            kern::force(isa);
            CHECK(pf::bitwise_equal(pf::add(a, b), add_ref));
            CHECK(pf::bitwise_equal(pf::sub(a, b), sub_ref));
            CHECK(pf::bitwise_equal(pf::hadamard(a, b), mul_ref));
            CHECK(pf::bitwise_equal(pf::scale(a, s), scale_ref));

            // axpy and acc mutate in place; run them straight off the tables.
            auto y1 = b, y2 = b;
            kern::table<T>(kern::Isa::scalar).axpy(s, a.data(), y1.data(), n);
            kern::table<T>(isa).axpy(s, a.data(), y2.data(), n);
            CHECK(pf::bitwise_equal(y1, y2));

            y1 = b;
            y2 = b;
            kern::table<T>(kern::Isa::scalar).acc(a.data(), y1.data(), n);
            kern::table<T>(isa).acc(a.data(), y2.data(), n);
            CHECK(pf::bitwise_equal(y1, y2));
        }
    }
}

TEST_CASE("force rejects unsupported variants") {
    IsaGuard guard;
#if defined(__aarch64__)
    CHECK_THROWS_AS(kern::force(kern::Isa::avx2), pf::ConfigError);
#else
    CHECK_THROWS_AS(kern::force(kern::Isa::neon), pf::ConfigError);
#endif
    CHECK_NOTHROW(kern::force(kern::Isa::scalar));
    CHECK(kern::active() == kern::Isa::scalar);
}

TEST_CASE("PF_ISA pins the variant at reset") {
    IsaGuard guard;
    ::setenv("PF_ISA", "scalar", 1);
    kern::reset();
    CHECK(kern::active() == kern::Isa::scalar);
    ::setenv("PF_ISA", "a-cpu-that-does-not-exist", 1);
    CHECK_THROWS_AS(kern::reset(), pf::ConfigError);
    ::unsetenv("PF_ISA");
    kern::reset();
}

TEST_CASE("variant names round-trip") {
    CHECK(kern::name(kern::Isa::scalar) == doctest::String("scalar"));
    CHECK(kern::name(kern::Isa::avx2) == doctest::String("avx2"));
    CHECK(kern::name(kern::Isa::neon) == doctest::String("neon"));
    CHECK(kern::supported(kern::Isa::scalar));
}
