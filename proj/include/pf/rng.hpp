#pragma once

// Deterministic random numbers.  std::mt19937_64 gives a standardized bit
// stream; everything layered on top (uniforms, normals, shuffles) is written
// out by hand because the standard library's distributions and std::shuffle
// are allowed to differ between implementations, and reproducibility from a
// seed is part of this library's contract.

#include <cstdint>
#include <random>
#include <vector>

namespace pf {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; values are produced in pairs and the
    // spare is cached, so draws are deterministic but stateful.
    double normal();

    // Normal(0, stddev^2) re-drawn until |x| <= cutoff * stddev.
    double truncated_normal(double stddev, double cutoff = 2.0);

    // Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates with this engine; std::shuffle is not reproducible across
    // standard libraries.
    template <typename V>
    void shuffle(V& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pf
