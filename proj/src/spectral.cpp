#include "lps/spectral.hpp"

#include "lps/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lps {

namespace {
constexpr double kKernelTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

Vec SpectralDecomposition::coeffs(const Vec& f) const {
    return vectors.transpose() * mu.cwiseProduct(f);
}

Vec SpectralDecomposition::synth(const Vec& c) const { return vectors * c; }

Vec SpectralDecomposition::project_kernel(const Vec& f) const {
    if (kernel_dim == 0) return Vec::Zero(f.size());
    const auto K = vectors.leftCols(kernel_dim);
    return K * (K.transpose() * mu.cwiseProduct(f));
}

Vec SpectralDecomposition::project_out_kernel(const Vec& f) const {
    return kernel_dim == 0 ? f : Vec(f - project_kernel(f));
}

Vec SpectralDecomposition::apply_gains(const Vec& gains, const Vec& f) const {
    return vectors * gains.cwiseProduct(coeffs(f));
}

double SpectralDecomposition::norm_mu(const Vec& f) const {
    return std::sqrt(kernels::sumsq_w(f.data(), mu.data(), f.size()));
}

SpectralDecomposition decompose(const Generator& g) {
    const int n = g.n();
    const Vec sqrt_mu = g.mu.cwiseSqrt();
    const Vec inv_sqrt_mu = sqrt_mu.cwiseInverse();

    // mu-similarity transform: B = D^{1/2} L D^{-1/2} is symmetric when L is
    // mu-self-adjoint; symmetrize to scrub roundoff before the solve.
    Mat B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = sqrt_mu[i] * g.matrix(i, j) * inv_sqrt_mu[j];
    B = 0.5 * (B + B.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Mat> es(B);
    if (es.info() != Eigen::Success) {
        const double residual = (B - B.transpose()).norm();
        std::ostringstream msg;
        msg << "decompose: eigensolver failed to converge (n=" << n
            << ", symmetrization residual=" << residual << ")";
        throw std::runtime_error(msg.str());
    }

    SpectralDecomposition dec;
    dec.lambdas = es.eigenvalues();
    dec.mu = g.mu;
    dec.vectors = inv_sqrt_mu.asDiagonal() * es.eigenvectors();

    const double lmax = std::max(dec.lambda_max(), 0.0);
    const double cut = kKernelTol * lmax;
    dec.kernel_dim = 0;
    for (int k = 0; k < n; ++k) {
        if (dec.lambdas[k] <= cut) {
            dec.lambdas[k] = std::max(dec.lambdas[k], 0.0);
            ++dec.kernel_dim;
        } else {
            break;
        }
    }
    return dec;
}

// ---------------------------------------------------------------------------
// Symbols

Symbol Symbol::exp_decay() {
    Symbol s;
    s.name = "exp";
    s.eval = [](double z) { return std::exp(-z); };
    s.delta_infinity = kInf;
    s.eps_zero = 1.0;
    s.defined_at_zero = true;
    s.value_at_zero = 1.0;
    s.exponential_tail = true;
    s.cross_dt = [](double a, double b) { return 1.0 / (a + b); };
    return s;
}

Symbol Symbol::phi(double eps) {
    if (eps < 0.0 || eps > 0.5) throw ValidationError("phi: eps must lie in [0, 1/2]");
    Symbol s;
    std::ostringstream nm;
    nm << "phi(" << eps << ")";
    s.name = nm.str();
    const double sigma = 0.5 + eps;
    s.eval = [sigma](double z) {
        if (z == 0.0) return sigma == 1.0 ? 1.0 : 0.0;
        return -std::expm1(-z) / std::pow(z, sigma);
    };
    s.delta_infinity = sigma;
    s.eps_zero = eps == 0.5 ? 1.0 : 0.5 - eps;
    s.defined_at_zero = true;
    s.value_at_zero = eps == 0.5 ? 1.0 : 0.0;
    return s;
}

Symbol Symbol::psi(double eps) {
    if (eps < 0.0 || eps > 0.5) throw ValidationError("psi: eps must lie in [0, 1/2]");
    Symbol s;
    std::ostringstream nm;
    nm << "psi(" << eps << ")";
    s.name = nm.str();
    const double sigma = 0.5 + eps;
    s.eval = [sigma](double z) { return z == 0.0 ? 0.0 : std::pow(z, sigma) * std::exp(-z); };
    s.delta_infinity = kInf;
    s.eps_zero = sigma;
    s.defined_at_zero = true;
    s.value_at_zero = 0.0;
    s.exponential_tail = true;
    s.cross_dt = [sigma](double a, double b) {
        return std::pow(a * b, sigma) * std::tgamma(2.0 * sigma + 1.0) /
               std::pow(a + b, 2.0 * sigma + 1.0);
    };
    s.cross_dt_over_t = [sigma](double a, double b) {
        return std::pow(a * b, sigma) * std::tgamma(2.0 * sigma) /
               std::pow(a + b, 2.0 * sigma);
    };
    return s;
}

Symbol Symbol::resolvent(double delta) {
    if (!(delta > 0.0)) throw ValidationError("resolvent: delta must be positive");
    Symbol s;
    std::ostringstream nm;
    nm << "resolvent(" << delta << ")";
    s.name = nm.str();
    s.eval = [delta](double z) { return std::pow(1.0 + z, -delta); };
    s.delta_infinity = delta;
    s.eps_zero = 1.0;
    s.defined_at_zero = true;
    s.value_at_zero = 1.0;
    return s;
}

Symbol Symbol::one_minus_exp() {
    Symbol s;
    s.name = "one-minus-exp";
    s.eval = [](double z) { return -std::expm1(-z); };
    s.delta_infinity = 0.0;   // no decay at infinity
    s.eps_zero = 1.0;
    s.defined_at_zero = true;
    s.value_at_zero = 0.0;
    return s;
}

Symbol Symbol::z_exp() {
    Symbol s;
    s.name = "z-exp";
    s.eval = [](double z) { return z * std::exp(-z); };
    s.delta_infinity = kInf;
    s.eps_zero = 1.0;
    s.defined_at_zero = true;
    s.value_at_zero = 0.0;
    s.exponential_tail = true;
    s.cross_dt = [](double a, double b) {
        const double s2 = a + b;
        return 2.0 * a * b / (s2 * s2 * s2);
    };
    s.cross_dt_over_t = [](double a, double b) {
        const double s2 = a + b;
        return a * b / (s2 * s2);
    };
    return s;
}

Symbol Symbol::identity_one() {
    Symbol s;
    s.name = "one";
    s.eval = [](double) { return 1.0; };
    s.delta_infinity = 0.0;
    s.eps_zero = 1.0;
    s.defined_at_zero = true;
    s.value_at_zero = 1.0;
    return s;
}

Symbol Symbol::product(const Symbol& a, const Symbol& b) {
    Symbol s;
    s.name = a.name + "*" + b.name;
    auto fa = a.eval, fb = b.eval;
    s.eval = [fa, fb](double z) { return fa(z) * fb(z); };
    s.delta_infinity = a.delta_infinity + b.delta_infinity;
    s.eps_zero = std::min(a.eps_zero, b.eps_zero);
    s.defined_at_zero = a.defined_at_zero && b.defined_at_zero;
    s.value_at_zero = s.defined_at_zero ? a.value_at_zero * b.value_at_zero : 0.0;
    s.exponential_tail = a.exponential_tail || b.exponential_tail;
    return s;
}

Symbol Symbol::tabulated(std::string name, std::vector<std::pair<double, double>> pts,
                         double delta_infinity, double eps_zero) {
    if (pts.size() < 2) throw ValidationError("tabulated symbol: need at least 2 points");
    std::sort(pts.begin(), pts.end());
    for (const auto& [z, fz] : pts) {
        (void)fz;
        if (!(z > 0.0)) throw ValidationError("tabulated symbol: abscissae must be positive");
    }
    Symbol s;
    s.name = std::move(name);
    s.delta_infinity = delta_infinity;
    s.eps_zero = eps_zero;
    s.defined_at_zero = false;
    s.eval = [pts = std::move(pts)](double z) {
        if (z <= pts.front().first) return pts.front().second;
        if (z >= pts.back().first) return pts.back().second;
        const double lz = std::log(z);
        std::size_t lo = 0, hi = pts.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (pts[mid].first <= z ? lo : hi) = mid;
        }
        const double l0 = std::log(pts[lo].first), l1 = std::log(pts[hi].first);
        const double w = (lz - l0) / (l1 - l0);
        return (1.0 - w) * pts[lo].second + w * pts[hi].second;
    };
    return s;
}

Symbol Symbol::parse(const std::string& s) {
    auto param = [&](const std::string& prefix) -> std::optional<double> {
        if (s.rfind(prefix + "(", 0) == 0 && s.back() == ')') {
            const std::string inner = s.substr(prefix.size() + 1, s.size() - prefix.size() - 2);
            try {
                std::size_t used = 0;
                const double v = std::stod(inner, &used);
                if (used == inner.size()) return v;
            } catch (...) {
            }
            throw ValidationError("symbol: bad parameter in '" + s + "'");
        }
        return std::nullopt;
    };
    if (s == "exp") return exp_decay();
    if (s == "one-minus-exp") return one_minus_exp();
    if (s == "z-exp") return z_exp();
    if (s == "one") return identity_one();
    if (auto e = param("phi")) return phi(*e);
    if (auto e = param("psi")) return psi(*e);
    if (auto d = param("resolvent")) return resolvent(*d);
    throw ValidationError("symbol: unknown symbol '" + s + "'");
}

SymbolCheckReport check_symbol_decay(const Symbol& F) {
    SymbolCheckReport r;
    r.finite_ok = true;
    for (double z = 1e-6; z <= 1e6; z *= 10.0)
        if (!std::isfinite(F(z))) r.finite_ok = false;
    if (F.defined_at_zero && !std::isfinite(F.value_at_zero)) r.finite_ok = false;

    // derivative growth near 0 against the declared eps, central differences
    if (F.eps_zero > 0.0) {
        double worst_d = 0.0;
        for (double z = 1e-6; z <= 1.0000001e-2; z *= std::pow(10.0, 0.25)) {
            const double h = 1e-4 * z;
            const double d = (F(z + h) - F(z - h)) / (2.0 * h);
            worst_d = std::max(worst_d, std::fabs(d) * std::pow(z, 1.0 - F.eps_zero));
        }
        const double h0 = 1e-6;
        const double ref_d =
            std::fabs((F(1e-2 + h0) - F(1e-2 - h0)) / (2.0 * h0)) *
            std::pow(1e-2, 1.0 - F.eps_zero);
        r.deriv_ok = worst_d <= 10.0 * ref_d + 1e-12;
    } else {
        r.deriv_ok = false;   // a positive eps is part of the contract
    }

    if (F.exponential_tail) {
        r.worst_ratio = std::fabs(F(1e2));
        r.decay_ok = r.worst_ratio <= 1e-20;
        return r;
    }
    if (F.delta_infinity <= 0.0) {
        // no decay declared; nothing to check at infinity
        r.decay_ok = true;
        return r;
    }
    const double ref = 10.0 * std::fabs(F(1e2)) * std::pow(1e2, F.delta_infinity);
    double worst = 0.0;
    for (double z = 1e2; z <= 1.0000001e6; z *= std::pow(10.0, 0.25))
        worst = std::max(worst, std::fabs(F(z)) * std::pow(z, F.delta_infinity));
    r.worst_ratio = ref > 0 ? worst / ref : (worst > 0 ? kInf : 0.0);
    r.decay_ok = worst <= ref;
    return r;
}

// ---------------------------------------------------------------------------
// Spectral operations

namespace {

double kernel_component(const SpectralDecomposition& dec, const Vec& f) {
    if (dec.kernel_dim == 0) return 0.0;
    const Vec c = dec.coeffs(f);
    double knorm = 0.0;
    for (int j = 0; j < dec.kernel_dim; ++j) knorm += c[j] * c[j];
    return std::sqrt(knorm);
}

// Per-mode gains F(t lambda_k); kernel modes need F(0).
Vec symbol_gains(const SpectralDecomposition& dec, const Symbol& F, double t, const Vec* f) {
    const int n = dec.n();
    if (dec.kernel_dim > 0 && !F.defined_at_zero && f &&
        kernel_component(dec, *f) > 1e-12 * dec.norm_mu(*f))
        throw DomainError("apply_symbol: " + F.name +
                          " undefined at 0 but f has a kernel component");
    Vec g(n);
    for (int k = 0; k < n; ++k) {
        if (k < dec.kernel_dim)
            g[k] = F.defined_at_zero ? F.value_at_zero : 0.0;
        else
            g[k] = F(t * dec.lambdas[k]);
    }
    return g;
}

} // namespace

Vec apply_symbol(const SpectralDecomposition& dec, const Symbol& F, double t, const Vec& f) {
    if (!(t > 0.0)) throw ValidationError("apply_symbol: t must be positive");
    const Vec g = symbol_gains(dec, F, t, &f);
    return dec.apply_gains(g, f);
}

Mat apply_symbol_grid(const SpectralDecomposition& dec, const Symbol& F,
                      const std::vector<double>& ts, const Vec& f) {
    const int n = dec.n();
    const int T = static_cast<int>(ts.size());
    if (!ts.empty()) symbol_gains(dec, F, ts[0], &f);   // kernel-component check once
    const Vec c = dec.coeffs(f);
    Mat W(T, n);
    for (int i = 0; i < T; ++i) {
        const Vec g = symbol_gains(dec, F, ts[i], nullptr);
        for (int k = 0; k < n; ++k) W(i, k) = g[k] * c[k];
    }
    return W * dec.vectors.transpose();
}

Vec fractional_power(const SpectralDecomposition& dec, double s, const Vec& f) {
    if (s == 0.0) return f;
    const int n = dec.n();
    if (s < 0.0 && kernel_component(dec, f) > 1e-10 * dec.norm_mu(f))
        throw DomainError(
            "fractional_power: s < 0 requires f mu-orthogonal to ker L "
            "(violated precondition: kernel component exceeds 1e-10 ||f||)");
    Vec g(n);
    for (int k = 0; k < n; ++k)
        g[k] = k < dec.kernel_dim ? 0.0 : std::pow(dec.lambdas[k], s);
    return dec.apply_gains(g, f);
}

Vec semigroup(const SpectralDecomposition& dec, double t, const Vec& f) {
    if (t < 0.0) throw ValidationError("semigroup: t must be nonnegative");
    if (t == 0.0) return f;
    Vec g(dec.n());
    for (int k = 0; k < dec.n(); ++k)
        g[k] = k < dec.kernel_dim ? 1.0 : std::exp(-t * dec.lambdas[k]);
    return dec.apply_gains(g, f);
}

Vec resolvent_power(const SpectralDecomposition& dec, double delta, double t, const Vec& f) {
    if (!(t > 0.0)) throw ValidationError("resolvent_power: t must be positive");
    if (!(delta > 0.0)) throw ValidationError("resolvent_power: delta must be positive");
    Vec g(dec.n());
    for (int k = 0; k < dec.n(); ++k)
        g[k] = std::pow(1.0 + t * (k < dec.kernel_dim ? 0.0 : dec.lambdas[k]), -delta);
    return dec.apply_gains(g, f);
}

} // namespace lps
