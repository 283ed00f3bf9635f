#include "lps/rbound.hpp"

#include "lps/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>

namespace lps {

double OperatorFamily::member_gain(double t, double lambda) const {
    const double st = std::sqrt(t);
    switch (kind) {
        case FamilyKind::SqrtTGammaSemigroup: return st * std::exp(-t * lambda);
        case FamilyKind::SqrtTGammaResolvent: return st * std::pow(1.0 + t * lambda, -delta);
        case FamilyKind::CustomSymbol: return st * custom(t * lambda);
    }
    return 0.0;
}

std::vector<double> OperatorFamily::apply(double t, const Vec& f) const {
    if (!(t > 0.0)) throw ValidationError("operator family: t must be positive");
    const Vec c = dec->coeffs(f);
    Vec g(dec->n());
    for (int k = 0; k < dec->n(); ++k) g[k] = member_gain(t, dec->lambdas[k]) * c[k];
    const Vec y = dec->synth(g);
    return gamma->channel_values(y);
}

OperatorFamily OperatorFamily::semigroup_family(const SpectralDecomposition& d,
                                                const CarreOperator& g) {
    OperatorFamily fam;
    fam.kind = FamilyKind::SqrtTGammaSemigroup;
    fam.dec = &d;
    fam.gamma = &g;
    return fam;
}

OperatorFamily OperatorFamily::resolvent_family(const SpectralDecomposition& d,
                                                const CarreOperator& g, double delta) {
    if (!(delta > 0.0)) throw ValidationError("resolvent family: delta must be positive");
    OperatorFamily fam;
    fam.kind = FamilyKind::SqrtTGammaResolvent;
    fam.delta = delta;
    fam.dec = &d;
    fam.gamma = &g;
    return fam;
}

OperatorFamily OperatorFamily::custom_family(const SpectralDecomposition& d,
                                             const CarreOperator& g, Symbol F) {
    OperatorFamily fam;
    fam.kind = FamilyKind::CustomSymbol;
    fam.custom = std::move(F);
    fam.dec = &d;
    fam.gamma = &g;
    return fam;
}

double FieldNorm::operator()(const double* data, std::size_t len) const {
    if (gamma) {
        const Vec mod = gamma->group_modulus_sq(data).cwiseSqrt();
        return kernels::pnorm_mu(mod.data(), mu->data(), mod.size(), p);
    }
    return kernels::pnorm_mu(data, mu->data(), len, p);
}

RademacherEstimate rademacher_norm(const std::vector<std::vector<double>>& fields,
                                   const FieldNorm& norm, RademacherMode mode, int mc_samples,
                                   std::uint64_t seed) {
    const int m = static_cast<int>(fields.size());
    if (m == 0) throw ValidationError("rademacher_norm: no fields");
    const std::size_t len = fields[0].size();
    for (const auto& f : fields)
        if (f.size() != len) throw ValidationError("rademacher_norm: field length mismatch");

    RademacherEstimate est;
    std::vector<double> sum(len, 0.0);

    if (mode == RademacherMode::Exact) {
        if (m > 16)
            throw ValidationError(
                "rademacher_norm: exact enumeration limited to m <= 16 (2^m patterns); "
                "use Monte Carlo");
        for (int k = 0; k < m; ++k) kernels::axpy(1.0, fields[k].data(), sum.data(), len);
        // Gray-code walk over all 2^m sign patterns: one sign flip per step.
        const std::uint64_t total = 1ull << m;
        double acc = norm(sum.data(), len);
        std::uint64_t gray = 0;
        for (std::uint64_t i = 1; i < total; ++i) {
            const std::uint64_t next = i ^ (i >> 1);
            const int bit = std::countr_zero(gray ^ next);
            const double sign = (next >> bit) & 1 ? -2.0 : 2.0;
            kernels::axpy(sign, fields[bit].data(), sum.data(), len);
            gray = next;
            acc += norm(sum.data(), len);
        }
        est.value = acc / static_cast<double>(total);
        est.evaluations = total;
        return est;
    }

    if (mc_samples < 1000)
        throw ValidationError("rademacher_norm: Monte Carlo needs at least 1000 samples");
    CounterRng rng(seed, 23);
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < mc_samples; ++s) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (int k = 0; k < m; ++k) {
            const double r = (rng.next_u64() & 1) ? 1.0 : -1.0;
            kernels::axpy(r, fields[k].data(), sum.data(), len);
        }
        const double v = norm(sum.data(), len);
        acc += v;
        acc2 += v * v;
    }
    est.value = acc / mc_samples;
    const double var = std::max(0.0, acc2 / mc_samples - est.value * est.value);
    est.std_error = std::sqrt(var / mc_samples);
    est.evaluations = static_cast<std::uint64_t>(mc_samples);
    return est;
}

// ---------------------------------------------------------------------------
// R-bound search

namespace {

// Cached square-function ratio objective for coordinate ascent. Fields live
// in eigen-coefficient space; updating one member costs one channel GEMV.
class RboundObjective {
public:
    RboundObjective(const OperatorFamily& fam, int m)
        : fam_(fam), m_(m), n_(fam.dec->n()) {
        chan_modes_ = fam.gamma->apply_to_columns(fam.dec->vectors);
        num_sq_ = Vec::Zero(n_);
        den_sq_ = Vec::Zero(n_);
        member_msq_.assign(m, Vec::Zero(n_));
        member_vsq_.assign(m, Vec::Zero(n_));
        ts_.assign(m, 1.0);
        cs_.assign(m, Vec::Zero(n_));
    }

    void set_t(int k, double t) {
        ts_[k] = t;
        refresh_channels(k);
    }

    void set_c(int k, const Vec& c) {
        cs_[k] = c;
        refresh_channels(k);
        den_sq_ -= member_vsq_[k];
        const Vec v = fam_.dec->synth(c);
        member_vsq_[k] = v.cwiseProduct(v);
        den_sq_ += member_vsq_[k];
    }

    double t_of(int k) const { return ts_[k]; }
    const Vec& c_of(int k) const { return cs_[k]; }

    double ratio(double p) const {
        const Vec& mu = fam_.dec->mu;
        const Vec den = den_sq_.cwiseMax(0.0).cwiseSqrt();
        const double dn = kernels::pnorm_mu(den.data(), mu.data(), n_, p);
        if (dn <= 0.0) return 0.0;
        const Vec num = num_sq_.cwiseMax(0.0).cwiseSqrt();
        return kernels::pnorm_mu(num.data(), mu.data(), n_, p) / dn;
    }

private:
    void refresh_channels(int k) {
        Vec g(n_);
        for (int j = 0; j < n_; ++j)
            g[j] = fam_.member_gain(ts_[k], fam_.dec->lambdas[j]) * cs_[k][j];
        const Vec chan = chan_modes_ * g;
        num_sq_ -= member_msq_[k];
        member_msq_[k] = fam_.gamma->group_modulus_sq(chan.data());
        num_sq_ += member_msq_[k];
    }

    const OperatorFamily& fam_;
    int m_, n_;
    Mat chan_modes_;       // channels x modes
    Vec num_sq_, den_sq_;  // per-vertex squared sums across members
    std::vector<Vec> member_msq_, member_vsq_;
    std::vector<double> ts_;
    std::vector<Vec> cs_;
};

} // namespace

RboundEstimate estimate_rbound(const OperatorFamily& family, double p, int m,
                               const RboundSearchSpec& search) {
    if (m < 1) throw ValidationError("estimate_rbound: m must be >= 1");
    const SpectralDecomposition& dec = *family.dec;
    const int n = dec.n();

    double t_lo = search.t_min, t_hi = search.t_max;
    if (t_lo == 0.0) t_lo = dec.lambda_max() > 0 ? 1e-3 / dec.lambda_max() : 1e-3;
    if (t_hi == 0.0) t_hi = dec.lambda_min_pos() > 0 ? 1e3 / dec.lambda_min_pos() : 1e3;

    RboundEstimate best;
    best.mode = RademacherMode::Exact;
    best.seed = search.seed;
    best.m = m;
    best.p = p;

    RboundObjective obj(family, m);
    CounterRng root(search.seed, 17);

    for (int restart = 0; restart < search.restarts; ++restart) {
        CounterRng rng = root.derive(restart);
        for (int k = 0; k < m; ++k) {
            Vec c(n);
            for (int j = 0; j < n; ++j) c[j] = rng.normal();
            const double nn = c.norm();
            if (nn > 0) c /= nn;
            obj.set_t(k, rng.log_uniform(t_lo, t_hi));
            obj.set_c(k, c);
        }
        double cur = obj.ratio(p);
        std::vector<double> t_step(m, 2.0);
        std::vector<double> f_step(m, 0.5);

        for (int step = 0; step < search.steps; ++step) {
            bool any_improved = false;
            for (int k = 0; k < m; ++k) {
                // multiplicative t line search
                bool t_improved = false;
                for (const double dir : {+1.0, -1.0}) {
                    const double t_old = obj.t_of(k);
                    const double t_try =
                        std::clamp(t_old * std::pow(t_step[k], dir), t_lo * 1e-3, t_hi * 1e3);
                    obj.set_t(k, t_try);
                    const double v = obj.ratio(p);
                    if (v > cur * (1.0 + 1e-14)) {
                        cur = v;
                        t_improved = true;
                    } else {
                        obj.set_t(k, t_old);
                    }
                }
                if (!t_improved) t_step[k] = 1.0 + 0.5 * (t_step[k] - 1.0);

                // random nudge in coefficient space
                Vec c_try = obj.c_of(k);
                for (int j = 0; j < n; ++j) c_try[j] += f_step[k] * rng.normal();
                const double nn = c_try.norm();
                if (nn > 0) c_try /= nn;
                const Vec c_keep = obj.c_of(k);
                obj.set_c(k, c_try);
                if (const double v = obj.ratio(p); v > cur * (1.0 + 1e-14)) {
                    cur = v;
                    any_improved = true;
                } else {
                    obj.set_c(k, c_keep);
                    f_step[k] = std::max(0.5 * f_step[k], 1e-10);
                }

                // pure-mode (axis) trials: exhaustive for small spectra,
                // sampled otherwise
                const int axis_budget = n <= 48 ? n : 24;
                for (int a = 0; a < axis_budget; ++a) {
                    const int mode_idx =
                        n <= 48 ? a : static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                    Vec axis = Vec::Zero(n);
                    axis[mode_idx] = 1.0;
                    const Vec keep = obj.c_of(k);
                    obj.set_c(k, axis);
                    if (const double v = obj.ratio(p); v > cur * (1.0 + 1e-14)) {
                        cur = v;
                        any_improved = true;
                    } else {
                        obj.set_c(k, keep);
                    }
                }
                any_improved = any_improved || t_improved;
            }
            if (!any_improved && step > 8) {
                bool tiny = true;
                for (int k = 0; k < m; ++k)
                    if (t_step[k] > 1.0 + 1e-9 || f_step[k] > 1e-9) tiny = false;
                if (tiny) break;
            }
        }

        if (cur > best.value) {
            best.value = cur;
            best.ts.resize(m);
            best.fs.assign(m, Vec());
            for (int k = 0; k < m; ++k) {
                best.ts[k] = obj.t_of(k);
                best.fs[k] = dec.synth(obj.c_of(k));
            }
        }
        best.restart_best.push_back(best.value);
    }
    return best;
}

double rbound_witness_ratio(const OperatorFamily& family, double p,
                            const std::vector<double>& ts, const std::vector<Vec>& fs) {
    if (ts.size() != fs.size() || ts.empty())
        throw ValidationError("rbound witness: mismatched t/f lists");
    const SpectralDecomposition& dec = *family.dec;
    const int n = dec.n();
    Vec num_sq = Vec::Zero(n), den_sq = Vec::Zero(n);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto chan = family.apply(ts[k], fs[k]);
        num_sq += family.gamma->group_modulus_sq(chan.data());
        den_sq += fs[k].cwiseProduct(fs[k]);
    }
    const Vec num = num_sq.cwiseSqrt(), den = den_sq.cwiseSqrt();
    const double dn = kernels::pnorm_mu(den.data(), dec.mu.data(), n, p);
    if (dn <= 0.0) throw DomainError("rbound witness: zero denominator");
    return kernels::pnorm_mu(num.data(), dec.mu.data(), n, p) / dn;
}

// ---------------------------------------------------------------------------
// Vertical square function

namespace {
// 16-point Gauss-Legendre rule on [-1, 1]
constexpr struct {
    double x, w;
} kG16[16] = {
    {-0.9894009349916499, 0.0271524594117541}, {-0.9445750230732326, 0.0622535239386479},
    {-0.8656312023878318, 0.0951585116824928}, {-0.7554044083550030, 0.1246289712555339},
    {-0.6178762444026438, 0.1495959888165767}, {-0.4580167776572274, 0.1691565193950025},
    {-0.2816035507792589, 0.1826034150449236}, {-0.0950125098376374, 0.1894506104550685},
    {0.0950125098376374, 0.1894506104550685},  {0.2816035507792589, 0.1826034150449236},
    {0.4580167776572274, 0.1691565193950025},  {0.6178762444026438, 0.1495959888165767},
    {0.7554044083550030, 0.1246289712555339},  {0.8656312023878318, 0.0951585116824928},
    {0.9445750230732326, 0.0622535239386479},  {0.9894009349916499, 0.0271524594117541}};
} // namespace

LpsResult square_function(const SpectralDecomposition& dec, const Symbol& G, const Vec& f,
                          const QuadratureSpec& quad) {
    quad.validate();
    if (!G.defined_at_zero || G.value_at_zero != 0.0 || !(G.eps_zero > 0.0))
        throw DivergenceError("square_function: " + G.name +
                              " does not vanish at 0; dt/t diverges");
    if (!(G.delta_infinity > 0.0) && !G.exponential_tail)
        throw DivergenceError("square_function: " + G.name + " has no decay at infinity");
    const SymbolCheckReport decl = check_symbol_decay(G);
    if (!decl.finite_ok || !decl.decay_ok)
        throw ValidationError("square_function: symbol " + G.name +
                              " failed the numerical check of its declared decay");

    const int n = dec.n();
    const int m = n - dec.kernel_dim;
    LpsResult r;

    if (G.cross_dt_over_t && m > 0) {
        // closed form: values(x)^2 = sum_{j,k} c_j c_k u_j(x) u_k(x) X(l_j, l_k)
        Mat X(m, m);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                X(j, k) = G.cross_dt_over_t(dec.lambdas[dec.kernel_dim + j],
                                            dec.lambdas[dec.kernel_dim + k]);
        Eigen::SelfAdjointEigenSolver<Mat> es(X);
        const Mat sqrtX = es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
        const Vec c = dec.coeffs(f).tail(m);
        const Mat P = dec.vectors.rightCols(m) * (c.asDiagonal() * sqrtX);
        r.values = P.rowwise().squaredNorm().cwiseMax(0.0).cwiseSqrt();
    } else if (m == 0) {
        r.values = Vec::Zero(n);
    } else {
        double t_min = quad.t_min, t_max = quad.t_max;
        const double lmax = dec.lambda_max(), lmin = dec.lambda_min_pos();
        if (t_min == 0.0) t_min = lmax > 0 ? 1e-3 / lmax : 1e-3;
        if (t_max == 0.0) t_max = lmin > 0 ? 1e3 / lmin : 1e3;

        // pure log panels; dt/t = du needs no Jacobian
        const int panels = std::max(1, (quad.nodes + 15) / 16);
        std::vector<double> ts, ws;
        const double u0 = std::log(t_min), u1 = std::log(t_max);
        for (int pn = 0; pn < panels; ++pn) {
            const double a = u0 + (u1 - u0) * pn / panels;
            const double b = u0 + (u1 - u0) * (pn + 1) / panels;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (const auto& node : kG16) {
                ts.push_back(std::exp(mid + half * node.x));
                ws.push_back(half * node.w);
            }
        }
        const Mat Y = apply_symbol_grid(dec, G, ts, f);
        Vec v2 = Vec::Zero(n);
        Vec row(n);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            row = Y.row(static_cast<int>(i));
            kernels::acc_scaled_sq(ws[i], row.data(), v2.data(), n);
        }
        r.values = v2.cwiseMax(0.0).cwiseSqrt();

        // head/tail bounds from the declared exponents
        const Vec c = dec.coeffs(f);
        double head = 0.0, tail = 0.0;
        for (int k = dec.kernel_dim; k < n; ++k) {
            const double gz0 = G(t_min * dec.lambdas[k]);
            head += c[k] * c[k] * gz0 * gz0 / std::max(2.0 * G.eps_zero, 1e-9);
            const double gz1 = G(t_max * dec.lambdas[k]);
            const double fac =
                G.exponential_tail ? 0.5 : 1.0 / std::max(2.0 * G.delta_infinity, 1e-9);
            tail += c[k] * c[k] * gz1 * gz1 * fac;
        }
        double total = 0.0;
        for (int x = 0; x < n; ++x) total += dec.mu[x] * v2[x];
        r.quadrature_error_estimate = (head + tail) / std::max(total, 1e-300);
        r.warning = r.quadrature_error_estimate > 1e-4;
    }

    for (double p : default_p_grid())
        r.p_norms[p] = kernels::pnorm_mu(r.values.data(), dec.mu.data(), n, p);
    return r;
}

FamilyComparison compare_families(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                  double p, double delta, int m, const RboundSearchSpec& search) {
    if (!(delta > 0.5)) throw ValidationError("compare_families: delta must exceed 1/2");
    FamilyComparison out;
    const OperatorFamily semi = OperatorFamily::semigroup_family(dec, gamma);
    const OperatorFamily reso = OperatorFamily::resolvent_family(dec, gamma, delta);
    out.semigroup = estimate_rbound(semi, p, m, search);
    out.resolvent = estimate_rbound(reso, p, m, search);
    out.ratio = out.resolvent.value > 0 ? out.semigroup.value / out.resolvent.value : 0.0;

    auto trending = [](const RboundEstimate& e) {
        const std::size_t n = e.restart_best.size();
        if (n < 8) return false;
        const double early = e.restart_best[3 * n / 4 - 1];
        return early > 0 && e.restart_best.back() > 1.1 * early;
    };
    out.semigroup_trending = trending(out.semigroup);
    out.resolvent_trending = trending(out.resolvent);
    return out;
}

} // namespace lps
