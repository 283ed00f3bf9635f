#include "lps/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>

namespace lps::kernels {
namespace {

bool avx2_usable() {
#if defined(LPS_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Backend* pick_default() {
    if (const char* env = std::getenv("LPS_LAB_SIMD")) {
        std::string v(env);
        if (v == "scalar") return &scalar_backend();
#if defined(LPS_HAVE_AVX2)
        if (v == "avx2" && avx2_usable()) return &avx2_backend();
#endif
        // "auto" or unrecognized falls through to detection
    }
#if defined(LPS_HAVE_AVX2)
    if (avx2_usable()) return &avx2_backend();
#endif
    return &scalar_backend();
}

std::atomic<const Backend*>& slot() {
    static std::atomic<const Backend*> s{pick_default()};
    return s;
}

} // namespace

const Backend& active() { return *slot().load(std::memory_order_relaxed); }

bool set_active(const std::string& name) {
    if (name == "scalar" || name.empty()) {
        slot().store(&scalar_backend());
        return true;
    }
#if defined(LPS_HAVE_AVX2)
    if (name == "avx2" && avx2_usable()) {
        slot().store(&avx2_backend());
        return true;
    }
#endif
    if (name == "auto") {
        slot().store(pick_default());
        return true;
    }
    return false;
}

double pnorm_mu(const double* x, const double* mu, std::size_t n, double p) {
    if (std::isinf(p)) return max_abs(x, n);
    if (p == 2.0) return std::sqrt(sumsq_w(x, mu, n));
    if (p == 1.0) return sumabs_w(x, mu, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += mu[i] * std::pow(std::fabs(x[i]), p);
    return std::pow(s, 1.0 / p);
}

} // namespace lps::kernels
