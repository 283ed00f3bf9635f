#pragma once

#include "lps/common.hpp"
#include "lps/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lps {

/// Eigenpairs of a generator in the mu-weighted inner product.
/// Eigenvalues ascend, so kernel modes (lambda <= kernel_tol * lambda_max)
/// occupy the leading indices.
struct SpectralDecomposition {
    Vec lambdas;     // ascending
    Mat vectors;     // columns u_k, mu-orthonormal
    Vec mu;
    int kernel_dim = 0;

    int n() const { return static_cast<int>(lambdas.size()); }
    double lambda_max() const { return lambdas.size() ? lambdas[lambdas.size() - 1] : 0.0; }
    /// Smallest eigenvalue above the kernel cutoff; 0 if none.
    double lambda_min_pos() const {
        return kernel_dim < n() ? lambdas[kernel_dim] : 0.0;
    }

    /// c_k = <f, u_k>_mu
    Vec coeffs(const Vec& f) const;
    /// sum_k c_k u_k
    Vec synth(const Vec& c) const;
    /// Pf, the projection onto ker L.
    Vec project_kernel(const Vec& f) const;
    /// f - Pf
    Vec project_out_kernel(const Vec& f) const;

    /// sum_k g_k <f,u_k>_mu u_k for an arbitrary per-mode gain vector.
    Vec apply_gains(const Vec& gains, const Vec& f) const;

    double norm_mu(const Vec& f) const;
};

/// throws on eigensolver failure; result satisfies the mu-orthonormality and
/// reconstruction contracts (tested, not assumed).
SpectralDecomposition decompose(const Generator& g);

/// Scalar spectral multiplier F with declared decay exponents.
/// delta_infinity: |F(z)| <= C/z^delta as z -> inf (may be +inf for
/// exponentially decaying symbols); eps_zero: |F'(z)| <= C/z^(1-eps) near 0.
struct Symbol {
    std::string name;
    std::function<double(double)> eval;
    double delta_infinity = 0.0;
    double eps_zero = 0.0;
    bool defined_at_zero = false;
    double value_at_zero = 0.0;
    bool exponential_tail = false;

    /// Closed form of int_0^inf F(t a) F(t b) dt, when one exists.
    std::function<double(double, double)> cross_dt;
    /// Closed form of int_0^inf F(t a) F(t b) dt/t, when one exists.
    std::function<double(double, double)> cross_dt_over_t;

    double operator()(double z) const { return eval(z); }

    static Symbol exp_decay();                 // e^{-z}
    static Symbol phi(double eps);             // (1 - e^{-z}) / z^{1/2+eps}
    static Symbol psi(double eps);             // z^{1/2+eps} e^{-z}
    static Symbol resolvent(double delta);     // (1+z)^{-delta}
    static Symbol one_minus_exp();             // 1 - e^{-z}
    static Symbol z_exp();                     // z e^{-z}
    static Symbol identity_one();              // F == 1
    /// Pointwise product tag F*G.
    static Symbol product(const Symbol& a, const Symbol& b);
    /// Tabulated (z, F(z)) pairs, log-linear interpolation (approximate).
    static Symbol tabulated(std::string name, std::vector<std::pair<double, double>> pts,
                            double delta_infinity, double eps_zero);

    /// Parse "exp", "phi(0.25)", "psi(0.1)", "resolvent(1)", "one-minus-exp",
    /// "z-exp". Throws ValidationError on unknown names.
    static Symbol parse(const std::string& s);
};

struct SymbolCheckReport {
    bool decay_ok = false;
    double worst_ratio = 0.0;   // max |F(z)| z^delta / reference over the grid
    bool finite_ok = false;
    bool deriv_ok = false;      // |F'(z)| z^{1-eps} bounded on [1e-6, 1e-2]
    bool ok() const { return decay_ok && finite_ok && deriv_ok; }
};

/// Numerical check of the declared exponents: infinity-decay on a log grid
/// z in [1e2, 1e6] (exponential-tail symbols pass if |F| is negligible
/// there) and the derivative growth |F'(z)| <= C / z^{1-eps} near zero via
/// central differences.
SymbolCheckReport check_symbol_decay(const Symbol& F);

/// F(tL) f = sum_k F(t lambda_k) <f,u_k>_mu u_k. Throws DomainError when F
/// is undefined at 0, the kernel is nontrivial and f has a kernel component.
Vec apply_symbol(const SpectralDecomposition& dec, const Symbol& F, double t, const Vec& f);

/// Rows = F(t_i L) f for each t_i (one GEMM; used by quadrature loops).
Mat apply_symbol_grid(const SpectralDecomposition& dec, const Symbol& F,
                      const std::vector<double>& ts, const Vec& f);

/// L^s f with 0^s := 0 for s > 0; s < 0 requires f orthogonal to ker L
/// (tolerance 1e-10 ||f||); s = 0 is the identity.
Vec fractional_power(const SpectralDecomposition& dec, double s, const Vec& f);

/// e^{-tL} f, t >= 0.
Vec semigroup(const SpectralDecomposition& dec, double t, const Vec& f);

/// (1 + tL)^{-delta} f, t > 0, delta > 0.
Vec resolvent_power(const SpectralDecomposition& dec, double delta, double t, const Vec& f);

} // namespace lps
