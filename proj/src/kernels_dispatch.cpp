#include "pf/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "pf/errors.hpp"

namespace pf::kern {

template <typename T>
const Kernels<T>& scalar_table();  // kernels_scalar.cpp

#if defined(__x86_64__) || defined(__i386__)
template <typename T>
const Kernels<T>& avx2_table();  // kernels_avx2.cpp
#endif
#if defined(__aarch64__)
template <typename T>
const Kernels<T>& neon_table();  // kernels_neon.cpp
#endif

const char* name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "?";
}

bool supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

namespace {

Isa parse_isa(const std::string& s) {
    if (s == "scalar") return Isa::scalar;
    if (s == "avx2") return Isa::avx2;
    if (s == "neon") return Isa::neon;
    throw ConfigError("PF_ISA: unknown variant '" + s + "' (expected scalar, avx2, or neon)");
}

Isa detect_default() {
    if (const char* env = std::getenv("PF_ISA"); env != nullptr && *env != '\0') {
        Isa isa = parse_isa(env);
        if (!supported(isa)) throw ConfigError(std::string("PF_ISA: '") + name(isa) + "' is not supported on this machine");
        return isa;
    }
    if (supported(Isa::avx2)) return Isa::avx2;
    if (supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

// -1 means "not chosen yet"; chosen lazily so PF_ISA errors surface as
// exceptions rather than during static initialization.
std::atomic<int> g_active{-1};

}  // namespace

Isa active() {
    int cur = g_active.load(std::memory_order_acquire);
    if (cur < 0) {
        Isa detected = detect_default();
        int expected = -1;
        if (g_active.compare_exchange_strong(expected, static_cast<int>(detected))) return detected;
        cur = g_active.load(std::memory_order_acquire);
    }
    return static_cast<Isa>(cur);
}

void force(Isa isa) {
    if (!supported(isa))
        throw ConfigError(std::string("kernels: variant '") + name(isa) + "' is not supported on this machine");
    g_active.store(static_cast<int>(isa), std::memory_order_release);
}

void reset() { g_active.store(static_cast<int>(detect_default()), std::memory_order_release); }

template <typename T>
const Kernels<T>& table(Isa isa) {
    if (!supported(isa))
        throw ConfigError(std::string("kernels: variant '") + name(isa) + "' is not supported on this machine");
    switch (isa) {
        case Isa::scalar:
            return scalar_table<T>();
        case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
            return avx2_table<T>();
#else
            break;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return neon_table<T>();
#else
            break;
#endif
    }
    return scalar_table<T>();  // unreachable given the supported() check
}

template <typename T>
const Kernels<T>& active_table() {
    return table<T>(active());
}

template const Kernels<float>& table<float>(Isa);
template const Kernels<double>& table<double>(Isa);
template const Kernels<float>& active_table<float>();
template const Kernels<double>& active_table<double>();

}  // namespace pf::kern
