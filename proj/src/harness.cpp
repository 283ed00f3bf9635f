#include "lps/harness.hpp"

#include "lps/kernels.hpp"
#include "lps/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace lps {

void validate_holder_triple(double p, double p0, double p1) {
    if (!(p > 1.0) || !(p0 > 1.0) || !(p1 > 1.0))
        throw ValidationError("Holder triple invalid: exponents must exceed 1");
    if (std::fabs(1.0 / p0 + 1.0 / p1 - 2.0 / p) > 1e-12)
        throw ValidationError("Holder triple invalid: 1/p0 + 1/p1 != 2/p");
}

double riesz_ratio(const SpectralDecomposition& dec, const CarreOperator& gamma, const Vec& f,
                   double p, double p0, double p1, double eps) {
    validate_holder_triple(p, p0, p1);
    if (!(eps > 0.0 && eps <= 0.5))
        throw ValidationError("riesz_ratio: eps must lie in (0, 1/2]");
    const double fn = dec.norm_mu(f);
    const Vec ft = dec.project_out_kernel(f);
    if (fn == 0.0 || dec.norm_mu(ft) <= 1e-14 * fn)
        throw DomainError("riesz_ratio: f lies in ker L after projection");

    const Vec mod = gamma.modulus(ft);
    const double num = kernels::pnorm_mu(mod.data(), dec.mu.data(), mod.size(), p);
    const Vec g0 = fractional_power(dec, 0.5 + eps, ft);
    const Vec g1 = fractional_power(dec, 0.5 - eps, ft);
    const double d0 = kernels::pnorm_mu(g0.data(), dec.mu.data(), g0.size(), p0);
    const double d1 = kernels::pnorm_mu(g1.data(), dec.mu.data(), g1.size(), p1);
    return num * num / (d0 * d1);
}

// ---------------------------------------------------------------------------
// ProductObjective

ProductObjective::ProductObjective(std::vector<Field> fields) : fields_(std::move(fields)) {
    if (fields_.empty()) throw ValidationError("objective: no fields");
    dim_ = static_cast<int>(fields_[0].A.cols());
    for (const Field& f : fields_)
        if (f.A.cols() != dim_) throw ValidationError("objective: field dimension mismatch");
}

double ProductObjective::field_norm(const Field& f, const Vec& y) const {
    if (f.group_offset.empty())
        return kernels::pnorm_mu(y.data(), f.mu.data(), y.size(), f.p);
    const int groups = static_cast<int>(f.group_offset.size()) - 1;
    Vec mod(groups);
    for (int g = 0; g < groups; ++g) {
        double s = 0.0;
        for (int i = f.group_offset[g]; i < f.group_offset[g + 1]; ++i) s += y[i] * y[i];
        mod[g] = std::sqrt(s);
    }
    return kernels::pnorm_mu(mod.data(), f.mu.data(), groups, f.p);
}

bool ProductObjective::admissible(const Vec& c) const {
    for (const Field& f : fields_)
        if (!(field_norm(f, f.A * c) > 0.0)) return false;
    return true;
}

double ProductObjective::eval(const Vec& c) const {
    double v = 0.0;
    for (const Field& f : fields_) {
        const double nrm = field_norm(f, f.A * c);
        if (!(nrm > 0.0)) return -std::numeric_limits<double>::infinity();
        v += f.exponent * std::log(nrm);
    }
    return v;
}

Vec ProductObjective::fd_gradient(const Vec& c, double h) const {
    std::vector<Vec> base;
    base.reserve(fields_.size());
    for (const Field& f : fields_) base.push_back(f.A * c);

    Vec grad(dim_);
    Vec y;
    for (int j = 0; j < dim_; ++j) {
        double plus = 0.0, minus = 0.0;
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            const Field& f = fields_[i];
            y = base[i];
            kernels::axpy(h, f.A.col(j).data(), y.data(), y.size());
            plus += f.exponent * std::log(std::max(field_norm(f, y), 1e-300));
            y = base[i];
            kernels::axpy(-h, f.A.col(j).data(), y.data(), y.size());
            minus += f.exponent * std::log(std::max(field_norm(f, y), 1e-300));
        }
        grad[j] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

std::pair<Vec, double> extremal_search(const ProductObjective& obj, Vec c0,
                                       const HarnessSearchSpec& spec, AscentTrace* trace) {
    AscentTrace local;
    AscentTrace& tr = trace ? *trace : local;

    double nn = c0.norm();
    if (!(nn > 0.0)) throw DomainError("extremal_search: zero initial vector");
    Vec c = c0 / nn;
    double val = obj.eval(c);
    double step = 0.1;

    for (int it = 0; it < spec.steps; ++it) {
        ++tr.iterations;
        Vec g = obj.fd_gradient(c, spec.fd_step);
        g -= g.dot(c) * c;   // tangent projection on the sphere
        const double gn = g.norm();
        if (!(gn > 0.0)) {
            tr.converged = true;
            break;
        }
        g /= gn;

        bool improved = false;
        double gain = 0.0;
        while (step >= 1e-14) {
            Vec c_try = c + step * g;
            c_try /= c_try.norm();
            const double v = obj.eval(c_try);
            if (v > val) {
                gain = v - val;
                c = c_try;
                val = v;
                improved = true;
                step *= 1.5;
                ++tr.improvements;
                break;
            }
            step *= 0.5;
        }
        if (!improved || gain < spec.min_rel_improvement) {
            tr.converged = true;
            break;
        }
    }
    return {c, val};
}

// ---------------------------------------------------------------------------
// RatioEvaluator

RatioEvaluator::RatioEvaluator(const SpectralDecomposition& dec, const CarreOperator& gamma,
                               double p, double p0, double p1, double eps)
    : dec_(&dec) {
    validate_holder_triple(p, p0, p1);
    if (!(eps > 0.0 && eps <= 0.5))
        throw ValidationError("ratio evaluator: eps must lie in (0, 1/2]");
    const int m = dec.n() - dec.kernel_dim;
    if (m == 0) throw DomainError("ratio evaluator: generator has trivial positive spectrum");
    const Mat U_pos = dec.vectors.rightCols(m);

    std::vector<ProductObjective::Field> fields(3);
    // ||Gamma f||_p^2: channel field, grouped per vertex
    fields[0].A = gamma.apply_to_columns(U_pos);
    fields[0].group_offset = gamma.vertex_offset;
    fields[0].mu = dec.mu;
    fields[0].p = p;
    fields[0].exponent = 2.0;
    // ||L^{1/2+eps} f||_p0 and ||L^{1/2-eps} f||_p1: vertex fields
    for (int i = 0; i < 2; ++i) {
        const double s = i == 0 ? 0.5 + eps : 0.5 - eps;
        Vec gains(m);
        for (int k = 0; k < m; ++k) gains[k] = std::pow(dec.lambdas[dec.kernel_dim + k], s);
        fields[1 + i].A = U_pos * gains.asDiagonal();
        fields[1 + i].mu = dec.mu;
        fields[1 + i].p = i == 0 ? p0 : p1;
        fields[1 + i].exponent = -1.0;
    }
    obj_ = std::make_unique<ProductObjective>(std::move(fields));
}

Vec RatioEvaluator::to_coeffs(const Vec& f) const {
    const int m = dec_->n() - dec_->kernel_dim;
    return dec_->coeffs(f).tail(m);
}

Vec RatioEvaluator::to_vertex(const Vec& c) const {
    const int m = dec_->n() - dec_->kernel_dim;
    return dec_->vectors.rightCols(m) * c;
}

double RatioEvaluator::ratio_of_coeffs(const Vec& c) const { return std::exp(obj_->eval(c)); }

double RatioEvaluator::ratio_of_vertex(const Vec& f) const {
    const Vec c = to_coeffs(f);
    const double fn = dec_->norm_mu(f);
    if (fn == 0.0 || c.norm() <= 1e-14 * fn)
        throw DomainError("ratio: f lies in ker L after projection");
    return ratio_of_coeffs(c);
}

// ---------------------------------------------------------------------------
// verify / sweeps

InequalityReport verify_multiplicative(const SpectralDecomposition& dec,
                                       const CarreOperator& gamma, double p, double p0, double p1,
                                       double eps, const std::vector<Vec>& corpus,
                                       const HarnessSearchSpec& spec) {
    if (corpus.empty()) throw ValidationError("verify: empty corpus");
    RatioEvaluator eval(dec, gamma, p, p0, p1, eps);

    InequalityReport rep;
    rep.p = p;
    rep.p0 = p0;
    rep.p1 = p1;
    rep.eps = eps;
    rep.seed = spec.seed;

    struct Scored {
        double rho;
        int index;
    };
    // corpus entries are independent; results land by index and are reduced
    // in corpus order afterwards
    std::vector<double> raw(corpus.size());
    parallel_for(static_cast<int>(corpus.size()), [&](int i) {
        try {
            raw[i] = eval.ratio_of_vertex(corpus[i]);
        } catch (const DomainError&) {
            raw[i] = std::numeric_limits<double>::quiet_NaN();   // kernel-only entry
        }
    });
    std::vector<Scored> scored;
    std::vector<double> rhos;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (std::isnan(raw[i])) continue;
        scored.push_back({raw[i], static_cast<int>(i)});
        rhos.push_back(raw[i]);
    }
    rep.corpus_admissible = static_cast<int>(scored.size());
    if (scored.empty()) {
        rep.no_admissible_corpus = true;
        return rep;
    }
    std::sort(rhos.begin(), rhos.end());
    rep.corpus_max = rhos.back();
    rep.corpus_median = rhos[rhos.size() / 2];
    double mean = 0.0;
    for (double r : rhos) mean += r;
    rep.corpus_mean = mean / rhos.size();

    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.rho > b.rho || (a.rho == b.rho && a.index < b.index);
    });

    double best_log = -std::numeric_limits<double>::infinity();
    Vec best_c;
    const int seeds = std::min<int>(spec.corpus_seeds, static_cast<int>(scored.size()));
    for (int s = 0; s < seeds; ++s) {
        Vec c0 = eval.to_coeffs(corpus[scored[s].index]);
        if (!(c0.norm() > 0.0)) continue;
        AscentTrace tr;
        auto [c_star, log_star] = extremal_search(eval.objective(), c0, spec, &tr);
        rep.search_iterations += tr.iterations;
        rep.search_improvements += tr.improvements;
        rep.search_converged = rep.search_converged || tr.converged;
        if (log_star > best_log) {
            best_log = log_star;
            best_c = c_star;
        }
    }

    if (best_c.size() > 0) {
        rep.max_ratio = std::exp(best_log);
        rep.witness = eval.to_vertex(best_c);
    }
    if (rep.witness.size() == 0 || rep.corpus_max > rep.max_ratio) {
        // no search ran, or ascent lost to its seed (it cannot, but keep exact)
        rep.max_ratio = rep.corpus_max;
        rep.witness = corpus[scored[0].index];
    }
    return rep;
}

const std::vector<double>& default_eps_grid() {
    static const std::vector<double> g{0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01};
    return g;
}

std::vector<SweepRow> epsilon_sweep(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                    double p, double p0, double p1,
                                    const std::vector<double>& eps_list,
                                    const std::vector<Vec>& corpus,
                                    const HarnessSearchSpec& spec) {
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        if (!(eps > 0.0 && eps <= 0.5))
            throw ValidationError("epsilon_sweep: eps must lie in (0, 1/2]");
        HarnessSearchSpec point = spec;
        point.seed = CounterRng(spec.seed, 101).derive(i).next_u64();
        SweepRow row;
        row.param = eps;
        row.report = verify_multiplicative(dec, gamma, p, p0, p1, eps, corpus, point);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepRow> size_sweep(const ModelFamilySpec& family, double p, double p0, double p1,
                                 double eps, const SizeSweepOptions& opts,
                                 const HarnessSearchSpec& spec) {
    std::vector<SweepRow> rows;
    Vec prev_witness;
    int prev_n = 0;
    for (std::size_t i = 0; i < family.sizes.size(); ++i) {
        const int size = family.sizes[i];
        GridSpec gs;
        if (family.kind == "path") {
            gs.dims = {size};
        } else if (family.kind == "grid2d") {
            gs.dims = {size, size};
        } else {
            throw ValidationError("size_sweep: unknown family kind '" + family.kind + "'");
        }
        gs.dirichlet = family.dirichlet;
        const Model m = grid_model(gs);
        const Generator gen = build_graph_laplacian(m);
        const SpectralDecomposition dec = decompose(gen);
        const CarreOperator gamma = make_carre(m, opts.mode);

        HarnessSearchSpec point = spec;
        point.seed = CounterRng(spec.seed, 313).derive(i).next_u64();
        CorpusSpec cspec;
        cspec.count = opts.corpus_count;
        cspec.seed = point.seed;
        std::vector<Vec> corpus = make_corpus(dec, cspec);
        if (opts.nest_witnesses && prev_witness.size() > 0 && dec.n() >= prev_n) {
            Vec embedded = Vec::Zero(dec.n());
            embedded.head(prev_n) = prev_witness;
            corpus.push_back(embedded);
        }

        SweepRow row;
        row.param = size;
        row.report = verify_multiplicative(dec, gamma, p, p0, p1, eps, corpus, point);
        row.report.model_id = family.kind + "-" + std::to_string(size);
        prev_witness = row.report.witness;
        prev_n = dec.n();
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Smoothing operator norm

OpNormEstimate gamma_smoothing_opnorm(const SpectralDecomposition& dec,
                                      const CarreOperator& gamma, double alpha, double p,
                                      const HarnessSearchSpec& spec) {
    if (!(alpha >= 0.0 && alpha < 0.5))
        throw ValidationError("smoothing opnorm: alpha must lie in [0, 1/2)");
    const int m = dec.n() - dec.kernel_dim;
    if (m == 0) throw DomainError("smoothing opnorm: trivial positive spectrum");
    const Mat U_pos = dec.vectors.rightCols(m);

    std::vector<ProductObjective::Field> fields(2);
    Vec gains(m);
    for (int k = 0; k < m; ++k) {
        const double l = dec.lambdas[dec.kernel_dim + k];
        gains[k] = std::pow(l, -alpha) * std::exp(-l);
    }
    fields[0].A = gamma.apply_to_columns(U_pos) * gains.asDiagonal();
    fields[0].group_offset = gamma.vertex_offset;
    fields[0].mu = dec.mu;
    fields[0].p = p;
    fields[0].exponent = 1.0;
    fields[1].A = U_pos;
    fields[1].mu = dec.mu;
    fields[1].p = p;
    fields[1].exponent = -1.0;
    ProductObjective obj(std::move(fields));

    OpNormEstimate est;
    est.seed = spec.seed;
    double best_log = -std::numeric_limits<double>::infinity();
    Vec best_c;

    // pure-mode starts plus a few random ones
    std::vector<Vec> starts;
    const int axis_count = std::min(m, 64);
    for (int a = 0; a < axis_count; ++a) {
        Vec c = Vec::Zero(m);
        c[m - 1 - a] = 1.0;   // favor the upper spectrum first
        starts.push_back(std::move(c));
    }
    CounterRng rng(spec.seed, 7);
    for (int r = 0; r < 3; ++r) {
        Vec c(m);
        for (int k = 0; k < m; ++k) c[k] = rng.normal();
        starts.push_back(std::move(c));
    }
    for (Vec& c0 : starts) {
        if (!(c0.norm() > 0.0) || !obj.admissible(c0 / c0.norm())) continue;
        AscentTrace tr;
        auto [c_star, log_star] = extremal_search(obj, c0, spec, &tr);
        est.iterations += tr.iterations;
        est.converged = est.converged || tr.converged;
        if (log_star > best_log) {
            best_log = log_star;
            best_c = c_star;
        }
    }
    est.value = std::exp(best_log);
    est.witness = U_pos * best_c;
    return est;
}

// ---------------------------------------------------------------------------
// Chain verification

std::vector<ChainReport> verify_hgamma_chain_multi(const SpectralDecomposition& dec,
                                                   const CarreOperator& gamma,
                                                   const std::vector<double>& ps,
                                                   const std::vector<double>& alpha_ps,
                                                   const std::vector<Vec>& corpus,
                                                   const TimeGrid& maximal_grid,
                                                   const HGammaPlan* plan) {
    if (ps.size() != alpha_ps.size() || ps.empty())
        throw ValidationError("chain: p and alpha lists must match");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (!(alpha_ps[i] > 0.0))
            throw ValidationError(
                "chain: alpha_p must be positive (pointwise hypothesis not established on this "
                "model)");
        if (!(ps[i] > 1.0 && ps[i] <= 2.0)) throw ValidationError("chain: p must lie in (1, 2]");
    }
    if (corpus.empty()) throw ValidationError("chain: empty corpus");

    std::unique_ptr<HGammaPlan> local;
    if (!plan) {
        local = std::make_unique<HGammaPlan>(dec, gamma);
        plan = local.get();
    }

    std::vector<ChainReport> reps(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        reps[i].p = ps[i];
        reps[i].alpha_p = alpha_ps[i];
        reps[i].worst_margin_rel = std::numeric_limits<double>::infinity();
    }

    for (const Vec& f : corpus) {
        for (int i = 0; i < f.size(); ++i)
            if (!(f[i] > 0.0))
                throw ValidationError("chain: corpus must be strictly positive");
        const LpsResult h = plan->eval(f);
        const Vec M = maximal_function(dec, f, maximal_grid);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const double p = ps[i];
            const double lhs =
                kernels::pnorm_mu(h.values.data(), dec.mu.data(), h.values.size(), p);
            const double mp = kernels::pnorm_mu(M.data(), dec.mu.data(), M.size(), p);
            const double fp = kernels::pnorm_mu(f.data(), dec.mu.data(), f.size(), p);
            const double rhs = std::pow(alpha_ps[i], -0.5) * std::pow(mp, 0.5 * (2.0 - p)) *
                               std::pow(fp, 0.5 * p);
            ChainCheck c{lhs, rhs, rhs - lhs};
            reps[i].checks.push_back(c);
            if (rhs > 0.0)
                reps[i].worst_margin_rel = std::min(reps[i].worst_margin_rel, c.margin / rhs);
        }
    }
    for (ChainReport& rep : reps) rep.pass = rep.worst_margin_rel >= -1e-8;
    return reps;
}

ChainReport verify_hgamma_chain(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                double p, double alpha_p, const std::vector<Vec>& corpus,
                                const TimeGrid& maximal_grid, const HGammaPlan* plan) {
    return verify_hgamma_chain_multi(dec, gamma, {p}, {alpha_p}, corpus, maximal_grid,
                                     plan)[0];
}

// ---------------------------------------------------------------------------
// Corpus generation

std::vector<Vec> make_corpus(const SpectralDecomposition& dec, const CorpusSpec& spec) {
    if (spec.count <= 0) throw ValidationError("corpus: count must be positive");
    const int n = dec.n();
    std::vector<Vec> corpus;
    corpus.reserve(spec.count);
    CounterRng root(spec.seed, 41);
    static const double taus[3] = {0.01, 0.1, 1.0};

    for (int i = 0; i < spec.count; ++i) {
        CounterRng rng = root.derive(i);
        Vec f(n);
        switch (i % 3) {
            case 0: {   // Gaussian coefficients in the eigenbasis
                Vec c(n);
                for (int k = 0; k < n; ++k) c[k] = rng.normal();
                f = dec.synth(c);
                break;
            }
            case 1: {   // heat-smoothed vertex noise
                Vec g(n);
                for (int k = 0; k < n; ++k) g[k] = rng.normal();
                f = semigroup(dec, taus[(i / 3) % 3], g);
                break;
            }
            default: {  // sigmoid bump over the vertex index
                const double c0 = rng.uniform(0.2, 0.8);
                const double w = rng.uniform(0.05, 0.3);
                for (int x = 0; x < n; ++x) {
                    const double pos = n > 1 ? static_cast<double>(x) / (n - 1) : 0.5;
                    f[x] = 1.0 / (1.0 + std::exp(-(pos - c0) / w));
                }
                break;
            }
        }
        if (spec.strictly_positive) {
            const double sup = kernels::max_abs(f.data(), n);
            if (sup > 0.0)
                for (int x = 0; x < n; ++x) f[x] = std::exp(f[x] / sup);
            else
                f = Vec::Ones(n);
        }
        corpus.push_back(std::move(f));
    }
    return corpus;
}

std::vector<Vec> orbit_augment(const SpectralDecomposition& dec, const std::vector<Vec>& corpus,
                               int per_decade) {
    TimeGrid grid;
    grid.points_per_decade = per_decade;
    const std::vector<double> ts = grid.points(dec);
    std::vector<Vec> out = corpus;
    for (const Vec& f : corpus) {
        const double sup0 = f.cwiseAbs().maxCoeff();
        const Mat Y = apply_symbol_grid(dec, Symbol::exp_decay(), ts, f);
        for (int i = 0; i < Y.rows(); ++i) {
            Vec y = Y.row(i).transpose();
            // drop samples once decay degrades them to roundoff: strict
            // positivity is lost and ratios built on them are noise
            if (!(y.minCoeff() > 1e-12 * y.maxCoeff())) break;
            if (!(y.maxCoeff() > 1e-12 * sup0)) break;
            out.push_back(std::move(y));
        }
    }
    return out;
}

} // namespace lps
