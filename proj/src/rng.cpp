#include "pf/rng.hpp"

#include <cmath>

namespace pf {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0, 1] uniforms; u1 is flipped away from zero so the log
    // argument is never 0.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::truncated_normal(double stddev, double cutoff) {
    for (;;) {
        double x = normal();
        if (std::abs(x) <= cutoff) return x * stddev;
    }
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling over the top of the 64-bit range keeps the result
    // exactly uniform for any n.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        std::uint64_t x = next_u64();
        if (x < limit) return x % n;
    }
}

}  // namespace pf
