#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pf/rng.hpp"

using pf::Rng;

TEST_CASE("same seed reproduces the exact stream") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(1234), d(1234);
    for (int i = 0; i < 100; ++i) {
        CHECK(c.uniform() == d.uniform());
        CHECK(c.normal() == d.normal());
    }
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    bool any_diff = false;
    for (int i = 0; i < 16; ++i) any_diff |= (a.next_u64() != b.next_u64());
    CHECK(any_diff);
}

TEST_CASE("uniform stays in [0, 1)") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("truncated normal respects the cutoff and has sane moments") {
    Rng r(42);
    const double stddev = 0.02;
    double sum = 0.0, sumsq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = r.truncated_normal(stddev);
        CHECK(std::abs(x) <= 2.0 * stddev);
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / n;
    double sd = std::sqrt(sumsq / n - mean * mean);
    CHECK(std::abs(mean) < 1e-3);
    // A normal truncated at 2 sigma has standard deviation ~0.88 sigma.
    CHECK(sd > 0.8 * stddev);
    CHECK(sd < 0.95 * stddev);
}

TEST_CASE("below is in range and unbiased enough to cover every residue") {
    Rng r(5);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        auto v = r.below(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<std::size_t> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    Rng a(9), b(9);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    CHECK(!std::is_sorted(v.begin(), v.end()));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}
