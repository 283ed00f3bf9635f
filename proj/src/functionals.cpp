#include "lps/functionals.hpp"

#include "lps/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

namespace lps {

void QuadratureSpec::validate() const {
    if (nodes < 16) throw ValidationError("quadrature: nodes must be >= 16");
    if (t_min != 0.0 || t_max != 0.0) {
        if (!(t_min > 0.0) || !(t_max > t_min))
            throw ValidationError("quadrature: need 0 < t_min < t_max");
    }
}

const std::vector<double>& default_p_grid() {
    static const std::vector<double> g{1.1, 1.25, 1.5, 1.75, 2.0};
    return g;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre recurrence.
struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss_rule(int n) {
    static std::map<int, GaussRule> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double z1 = 2.0, pp = 0.0;
        while (std::fabs(z - z1) > 1e-15) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            z1 = z;
            z = z1 - p1 / pp;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return cache.emplace(n, std::move(r)).first->second;
}

struct QuadNodes {
    std::vector<double> t;   // abscissae in t
    std::vector<double> w;   // weights including the log-substitution Jacobian
};

// Head panel on [0, t_min] in linear t plus composite Gauss-Legendre panels
// in u = log t over [t_min, t_max].
QuadNodes build_nodes(double t_min, double t_max, int budget, int per_panel) {
    QuadNodes q;
    const GaussRule& g = gauss_rule(per_panel);
    auto add_panel = [&](double a, double b, bool log_panel) {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < per_panel; ++i) {
            const double u = mid + half * g.x[i];
            if (log_panel) {
                const double t = std::exp(u);
                q.t.push_back(t);
                q.w.push_back(half * g.w[i] * t);
            } else {
                q.t.push_back(u);
                q.w.push_back(half * g.w[i]);
            }
        }
    };
    add_panel(0.0, t_min, false);
    const double u0 = std::log(t_min), u1 = std::log(t_max);
    const int panels = std::max(1, (budget + per_panel - 1) / per_panel);
    for (int p = 0; p < panels; ++p)
        add_panel(u0 + (u1 - u0) * p / panels, u0 + (u1 - u0) * (p + 1) / panels, true);
    return q;
}

void auto_bounds(const SpectralDecomposition& dec, double& t_min, double& t_max) {
    const double lmax = dec.lambda_max();
    const double lmin = dec.lambda_min_pos();
    if (t_min == 0.0) t_min = lmax > 0.0 ? 1e-3 / lmax : 1e-3;
    if (t_max == 0.0) t_max = lmin > 0.0 ? 1e3 / lmin : 1e3;
    if (!(t_max > t_min)) t_max = t_min * 1e6;
}

// Truncated-tail bound: int_{t_max}^inf sum_mu |Gamma F(tL) f|^2 dt
//   <= sum_k c_k^2 int_{z_k}^inf F(z)^2 dz,   z_k = t_max lambda_k,
// using ||Gamma g||_2^2 <= <Lg, g> and the declared decay of F at infinity.
double tail_bound(const SpectralDecomposition& dec, const Symbol& F, const Vec& c,
                  double t_max) {
    double tail = 0.0;
    for (int k = dec.kernel_dim; k < dec.n(); ++k) {
        const double zk = t_max * dec.lambdas[k];
        const double fz = F(zk);
        double modal;
        if (F.exponential_tail) {
            modal = fz * fz;   // F^2 decays at least like e^{-(z - z_k)} past z_k >= 1e3
        } else {
            const double two_delta = 2.0 * F.delta_infinity;
            modal = fz * fz * zk / std::max(two_delta - 1.0, 1e-9);
        }
        tail += c[k] * c[k] * modal;
    }
    return tail;
}

void fill_norms(LpsResult& r, const Vec& mu) {
    for (double p : default_p_grid())
        r.p_norms[p] = kernels::pnorm_mu(r.values.data(), mu.data(), r.values.size(), p);
}

} // namespace

// ---------------------------------------------------------------------------
// Closed-form H_Gamma

HGammaPlan::HGammaPlan(const SpectralDecomposition& dec, const CarreOperator& gamma)
    : dec_(&dec), gamma_(&gamma) {
    const int m = dec.n() - dec.kernel_dim;
    if (m == 0) return;
    const Mat U_pos = dec.vectors.rightCols(m);
    R_ = gamma.apply_to_columns(U_pos);

    Mat M(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            M(j, k) = 1.0 / (dec.lambdas[dec.kernel_dim + j] + dec.lambdas[dec.kernel_dim + k]);
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    sqrtM_ = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

LpsResult HGammaPlan::eval(const Vec& f) const {
    const SpectralDecomposition& dec = *dec_;
    const CarreOperator& gamma = *gamma_;
    LpsResult r;
    const int m = dec.n() - dec.kernel_dim;
    if (m == 0) {
        r.values = Vec::Zero(dec.n());
        fill_norms(r, dec.mu);
        return r;
    }
    const Vec c = dec.coeffs(f).tail(m);
    const Mat P = R_ * (c.asDiagonal() * sqrtM_);
    Vec h2 = Vec::Zero(gamma.n);
    for (int x = 0; x < gamma.n; ++x) {
        double s = 0.0;
        for (int ch = gamma.vertex_offset[x]; ch < gamma.vertex_offset[x + 1]; ++ch)
            s += P.row(ch).squaredNorm();
        h2[x] = s;
    }
    r.values = h2.cwiseMax(0.0).cwiseSqrt();
    fill_norms(r, dec.mu);
    return r;
}

LpsResult h_gamma_exact(const SpectralDecomposition& dec, const CarreOperator& gamma,
                        const Vec& f) {
    return HGammaPlan(dec, gamma).eval(f);
}

// ---------------------------------------------------------------------------
// Quadrature LPS functionals

LpsResult h_gamma_F(const SpectralDecomposition& dec, const CarreOperator& gamma,
                    const Symbol& F, const Vec& f, const QuadratureSpec& quad) {
    quad.validate();
    if (!(F.delta_infinity > 0.5))
        throw DivergenceError("h_gamma_F: symbol " + F.name + " decays like z^-" +
                              std::to_string(F.delta_infinity) +
                              " at infinity; the t-integral diverges (need delta > 1/2)");
    // declared exponents are checked, not trusted
    const SymbolCheckReport decl = check_symbol_decay(F);
    if (!decl.finite_ok || !decl.decay_ok)
        throw ValidationError("h_gamma_F: symbol " + F.name +
                              " failed the numerical check of its declared decay");

    double t_min = quad.t_min, t_max = quad.t_max;
    auto_bounds(dec, t_min, t_max);

    const QuadNodes fine = build_nodes(t_min, t_max, quad.nodes, 16);
    const QuadNodes coarse = build_nodes(t_min, t_max, quad.nodes, 8);

    std::vector<double> all_t = fine.t;
    all_t.insert(all_t.end(), coarse.t.begin(), coarse.t.end());
    const Mat Y = apply_symbol_grid(dec, F, all_t, f);

    const int n = gamma.n;
    Vec h2 = Vec::Zero(n);
    double total_fine = 0.0, total_coarse = 0.0;
    std::vector<double> chan(gamma.channel_count());
    Vec row(n), msq(n);
    for (std::size_t i = 0; i < all_t.size(); ++i) {
        row = Y.row(static_cast<int>(i));
        gamma.channel_values_into(row.data(), chan.data());
        msq = gamma.group_modulus_sq(chan.data());
        const double mass = kernels::sumabs_w(msq.data(), dec.mu.data(), n);
        if (i < fine.t.size()) {
            kernels::axpy(fine.w[i], msq.data(), h2.data(), n);
            total_fine += fine.w[i] * mass;
        } else {
            total_coarse += coarse.w[i - fine.t.size()] * mass;
        }
    }

    const Vec c = dec.coeffs(f);
    const double tail = tail_bound(dec, F, c, t_max);

    LpsResult r;
    r.values = h2.cwiseMax(0.0).cwiseSqrt();
    fill_norms(r, dec.mu);
    const double denom = std::max(total_fine, 1e-300);
    r.quadrature_error_estimate = (std::fabs(total_fine - total_coarse) + tail) / denom;
    r.warning = r.quadrature_error_estimate > 1e-4;
    return r;
}

std::vector<double> TimeGrid::points(const SpectralDecomposition& dec) const {
    double a = t_min, b = t_max;
    auto_bounds(dec, a, b);
    const double decades = std::log10(b / a);
    const int count = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
    std::vector<double> ts(count);
    for (int i = 0; i < count; ++i)
        ts[i] = a * std::pow(b / a, static_cast<double>(i) / (count - 1));
    return ts;
}

Vec maximal_function(const SpectralDecomposition& dec, const Vec& f, const TimeGrid& grid) {
    const int n = dec.n();
    Vec m = Vec::Zero(n);
    kernels::ew_max_abs(f.data(), m.data(), n);                      // t -> 0
    const Vec pf = dec.project_kernel(f);
    kernels::ew_max_abs(pf.data(), m.data(), n);                     // t -> inf
    const std::vector<double> ts = grid.points(dec);
    const Mat Y = apply_symbol_grid(dec, Symbol::exp_decay(), ts, f);
    Vec row(n);
    for (int i = 0; i < Y.rows(); ++i) {
        row = Y.row(i);
        kernels::ew_max_abs(row.data(), m.data(), n);
    }
    return m;
}

LpsResult meyer_S(const SpectralDecomposition& dec, const CarreOperator& gamma, const Vec& f,
                  const QuadratureSpec& quad) {
    quad.validate();
    double t_min = quad.t_min, t_max = quad.t_max;
    auto_bounds(dec, t_min, t_max);

    const Symbol F = Symbol::exp_decay();
    const QuadNodes fine = build_nodes(t_min, t_max, quad.nodes, 16);
    const QuadNodes coarse = build_nodes(t_min, t_max, quad.nodes, 8);
    std::vector<double> all_t = fine.t;
    all_t.insert(all_t.end(), coarse.t.begin(), coarse.t.end());
    const Mat Y = apply_symbol_grid(dec, F, all_t, f);

    const int n = gamma.n;
    Vec s2 = Vec::Zero(n);
    double total_fine = 0.0, total_coarse = 0.0;
    std::vector<double> chan(gamma.channel_count());
    Vec row(n), msq(n), smoothed(n);
    for (std::size_t i = 0; i < all_t.size(); ++i) {
        const double t = all_t[i];
        row = Y.row(static_cast<int>(i));
        gamma.channel_values_into(row.data(), chan.data());
        msq = gamma.group_modulus_sq(chan.data());
        smoothed = semigroup(dec, t, msq);
        const double mass = kernels::sumabs_w(smoothed.data(), dec.mu.data(), n);
        if (i < fine.t.size()) {
            kernels::axpy(fine.w[i], smoothed.data(), s2.data(), n);
            total_fine += fine.w[i] * mass;
        } else {
            total_coarse += coarse.w[i - fine.t.size()] * mass;
        }
    }

    const Vec c = dec.coeffs(f);
    const double tail = tail_bound(dec, F, c, t_max);   // mass is non-increasing under e^{-tL}

    LpsResult r;
    r.values = s2.cwiseMax(0.0).cwiseSqrt();
    fill_norms(r, dec.mu);
    const double denom = std::max(total_fine, 1e-300);
    r.quadrature_error_estimate = (std::fabs(total_fine - total_coarse) + tail) / denom;
    r.warning = r.quadrature_error_estimate > 1e-4;
    return r;
}

GradientBoundFit fit_gradient_bound(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                    double theta, const std::vector<Vec>& corpus,
                                    const TimeGrid& grid) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw ValidationError("fit_gradient_bound: theta must lie in (0, 1]");
    if (corpus.empty()) throw ValidationError("fit_gradient_bound: empty corpus");

    GradientBoundFit fit;
    const int n = dec.n();
    const std::vector<double> ts = grid.points(dec);
    std::vector<double> theta_ts(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) theta_ts[i] = theta * ts[i];

    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        const Vec& f = corpus[ci];
        const Vec msq0 = gamma.modulus_sq(f);
        const double floor = 1e-14 * std::max(msq0.maxCoeff(), 1e-300);

        // t = 0: both sides equal |Gamma f|^2
        if (msq0.maxCoeff() > 0.0 && fit.c_theta < 1.0) {
            fit.c_theta = 1.0;
            fit.witness_t = 0.0;
            fit.witness_vertex = -1;
            fit.witness_corpus_index = static_cast<int>(ci);
        }

        const Mat Ynum = apply_symbol_grid(dec, Symbol::exp_decay(), ts, f);
        const Mat Yden = apply_symbol_grid(dec, Symbol::exp_decay(), theta_ts, msq0);

        std::vector<double> chan(gamma.channel_count());
        Vec row(n), msq(n);
        double last_max = 0.0, prev_max = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            row = Ynum.row(static_cast<int>(i));
            gamma.channel_values_into(row.data(), chan.data());
            msq = gamma.group_modulus_sq(chan.data());
            double grid_max = 0.0;
            for (int x = 0; x < n; ++x) {
                const double den = Yden(static_cast<int>(i), x);
                if (den <= floor) continue;
                const double ratio = msq[x] / den;
                grid_max = std::max(grid_max, ratio);
                if (ratio > fit.c_theta) {
                    fit.c_theta = ratio;
                    fit.witness_t = ts[i];
                    fit.witness_vertex = x;
                    fit.witness_corpus_index = static_cast<int>(ci);
                }
            }
            prev_max = last_max;
            last_max = grid_max;
        }
        if (last_max > prev_max * (1.0 + 1e-9) && last_max > 0.0) fit.growing_in_t = true;
    }
    return fit;
}

} // namespace lps
