#include "lps/kernels.hpp"

#include <cmath>

namespace lps::kernels {
namespace {

double dot_s(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double wdot_s(const double* a, const double* b, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i] * w[i];
    return s;
}

double sumsq_w_s(const double* x, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
    return s;
}

double sumabs_w_s(const double* x, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::fabs(x[i]);
    return s;
}

double max_abs_s(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

void axpy_s(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_s(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void acc_scaled_sq_s(double a, const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += a * x[i] * x[i];
}

void ew_max_abs_s(const double* x, double* m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) m[i] = std::max(m[i], std::fabs(x[i]));
}

} // namespace

const Backend& scalar_backend() {
    static const Backend b{
        "scalar",  dot_s,   wdot_s,         sumsq_w_s,    sumabs_w_s,
        max_abs_s, axpy_s,  scale_s,        acc_scaled_sq_s, ew_max_abs_s,
    };
    return b;
}

} // namespace lps::kernels
