#pragma once

#include <cstddef>
#include <string>

namespace lps::kernels {

/// One table of the arithmetic inner loops everything above is built from.
/// Two implementations exist: a scalar reference and an AVX2 variant; a
/// backend is selected once at startup (see `active`).
struct Backend {
    const char* name;

    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// sum_i a[i] * b[i] * w[i]   (weighted inner product)
    double (*wdot)(const double* a, const double* b, const double* w, std::size_t n);
    /// sum_i w[i] * x[i]^2
    double (*sumsq_w)(const double* x, const double* w, std::size_t n);
    /// sum_i w[i] * |x[i]|
    double (*sumabs_w)(const double* x, const double* w, std::size_t n);
    /// max_i |x[i]|
    double (*max_abs)(const double* x, std::size_t n);
    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    /// acc[i] += a * x[i]^2   (square-function accumulation)
    void (*acc_scaled_sq)(double a, const double* x, double* acc, std::size_t n);
    /// m[i] = max(m[i], |x[i]|)   (running maximal function)
    void (*ew_max_abs)(const double* x, double* m, std::size_t n);
};

const Backend& scalar_backend();
#if defined(LPS_HAVE_AVX2)
const Backend& avx2_backend();
#endif

/// Backend in use. Picked on first call: AVX2 when the CPU supports it,
/// scalar otherwise; the environment variable LPS_LAB_SIMD=scalar|avx2|auto
/// overrides.
const Backend& active();

/// Force a backend by name ("scalar", "avx2"). Returns false if unavailable.
bool set_active(const std::string& name);

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double wdot(const double* a, const double* b, const double* w, std::size_t n) {
    return active().wdot(a, b, w, n);
}
inline double sumsq_w(const double* x, const double* w, std::size_t n) {
    return active().sumsq_w(x, w, n);
}
inline double sumabs_w(const double* x, const double* w, std::size_t n) {
    return active().sumabs_w(x, w, n);
}
inline double max_abs(const double* x, std::size_t n) { return active().max_abs(x, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, double* x, std::size_t n) { active().scale(a, x, n); }
inline void acc_scaled_sq(double a, const double* x, double* acc, std::size_t n) {
    active().acc_scaled_sq(a, x, acc, n);
}
inline void ew_max_abs(const double* x, double* m, std::size_t n) {
    active().ew_max_abs(x, m, n);
}

/// mu-weighted p-norm (sum_i mu[i] |x[i]|^p)^(1/p); p may be infinity.
/// p in {1, 2, inf} route through the backend; other p fall back to a scalar
/// std::pow loop in every backend.
double pnorm_mu(const double* x, const double* mu, std::size_t n, double p);

} // namespace lps::kernels
