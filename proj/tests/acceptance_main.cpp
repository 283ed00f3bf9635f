// Acceptance suite: runs every gate criterion on the bundled model gallery
// and prints one PASS/FAIL line per criterion. Exit code = failure count.

#include "lps/cli.hpp"
#include "lps/harness.hpp"
#include "lps/json_io.hpp"
#include "lps/kernels.hpp"
#include "lps/parallel.hpp"
#include "lps/rbound.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace lps;
namespace fs = std::filesystem;

namespace {

const std::string kGallery = LPS_GALLERY_DIR;

struct GalleryEntry {
    std::string name;
    Model model;
    Generator gen;
    SpectralDecomposition dec;
    CarreOperator full;
    CarreOperator grad;
    bool conservative = false;   // V == 0 and no Dirichlet boundary
    bool zero_potential = false; // V == 0 (boundary killing allowed)
};

std::vector<GalleryEntry> load_gallery() {
    const char* names[] = {"k2",      "p16",          "p64",
                           "p256",    "p512",         "grid16x16",
                           "schrodinger_spike",       "elliptic_contrast"};
    std::vector<GalleryEntry> out;
    for (const char* n : names) {
        GalleryEntry e;
        e.name = n;
        e.model = load_model_file(kGallery + "/" + n + ".json");
        e.model.name = n;
        e.gen = build_graph_laplacian(e.model);
        e.dec = decompose(e.gen);
        e.full = make_carre(e.model, CarreMode::Full);
        e.grad = make_carre(e.model, CarreMode::GradientOnly);
        e.zero_potential = e.model.potential.size() == 0 || e.model.potential.maxCoeff() == 0.0;
        e.conservative = e.zero_potential && e.model.dirichlet.empty();
        out.push_back(std::move(e));
    }
    return out;
}

int g_failures = 0;

void criterion(int id, const std::string& label, const std::function<std::string()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string fail;
    try {
        fail = body();
    } catch (const std::exception& e) {
        fail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (fail.empty()) {
        std::printf("PASS criterion %2d: %s (%.1fs)\n", id, label.c_str(), secs);
    } else {
        std::printf("FAIL criterion %2d: %s (%.1fs) -- %s\n", id, label.c_str(), secs,
                    fail.c_str());
        ++g_failures;
    }
    std::fflush(stdout);
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss << x;
    return ss.str();
}

std::vector<Vec> random_corpus(const SpectralDecomposition& dec, int count, std::uint64_t seed,
                               bool positive) {
    CorpusSpec cs;
    cs.count = count;
    cs.seed = seed;
    cs.strictly_positive = positive;
    return make_corpus(dec, cs);
}

// matrix-route special case (no eigendecomposition): the kernel projection is
// the mu-weighted mean for conservative models and zero for killed ones.
double matrix_route_ratio(const GalleryEntry& e, const Vec& f, double p) {
    const Vec mod = e.full.modulus(f);
    const double num = kernels::pnorm_mu(mod.data(), e.gen.mu.data(), mod.size(), p);
    const Vec lf = e.gen.matrix * f;
    const double d0 = kernels::pnorm_mu(lf.data(), e.gen.mu.data(), lf.size(), p);
    Vec centered = f;
    if (e.conservative) centered.array() -= e.gen.mu.dot(f) / e.gen.mu.sum();
    const double d1 =
        kernels::pnorm_mu(centered.data(), e.gen.mu.data(), centered.size(), p);
    return num * num / (d0 * d1);
}

} // namespace

int main() {
    std::printf("gallery: %s\n", kGallery.c_str());
    std::vector<GalleryEntry> gallery = load_gallery();
    std::printf("loaded %zu models\n", gallery.size());
    std::fflush(stdout);

    // 1 ------------------------------------------------------------------
    criterion(1, "energy identity at p=2: ||Gamma f||_2^2 = ||L^{1/2} f||_2^2", [&] {
        for (const GalleryEntry& e : gallery) {
            CounterRng rng(1001);
            for (int i = 0; i < 100; ++i) {
                Vec f(e.dec.n());
                for (int k = 0; k < f.size(); ++k) f[k] = rng.normal();
                const Vec msq = e.full.modulus_sq(f);
                const double lhs = kernels::sumabs_w(msq.data(), e.gen.mu.data(), msq.size());
                const Vec hf = fractional_power(e.dec, 0.5, f);
                const double rhs = std::pow(e.dec.norm_mu(hf), 2.0);
                if (std::fabs(lhs - rhs) > 1e-10 * rhs)
                    return e.name + ": |" + fmt(lhs) + " - " + fmt(rhs) + "| > 1e-10 rhs";
            }
        }
        return std::string();
    });

    // 2 ------------------------------------------------------------------
    criterion(2, "alpha_2 = 2 +- 1e-9 for gradient-only Gamma on V=0 models", [&] {
        for (const GalleryEntry& e : gallery) {
            if (!e.zero_potential) continue;
            const auto corpus = random_corpus(e.dec, 20, 2002, true);
            const AlphaMeasurement a = measure_alpha_p(e.gen, e.grad, 2.0, corpus);
            if (!a.any_active) return e.name + ": no active vertex";
            if (std::fabs(a.alpha - 2.0) > 1e-9)
                return e.name + ": alpha_2 = " + fmt(a.alpha);
        }
        return std::string();
    });

    // 3 ------------------------------------------------------------------
    criterion(3, "sub-Markov checks and the mass of L f^p", [&] {
        for (const GalleryEntry& e : gallery) {
            const SubmarkovReport r = verify_submarkov(e.gen);
            if (!r.pass()) return e.name + ": submarkov check failed";
            CounterRng rng(3003);
            for (double p : {1.3, 2.0}) {
                for (int i = 0; i < 5; ++i) {
                    Vec f(e.dec.n());
                    for (int k = 0; k < f.size(); ++k) f[k] = 0.1 + rng.uniform01();
                    const double mass = l_power_integral(e.gen, f, p);
                    const double scale = std::pow(f.maxCoeff(), p) * e.gen.mu.sum();
                    if (e.conservative) {
                        if (std::fabs(mass) > 1e-12 * scale)
                            return e.name + ": conservative mass " + fmt(mass);
                    } else if (mass < -1e-12 * scale) {
                        return e.name + ": killed-model mass " + fmt(mass);
                    }
                }
            }
        }
        return std::string();
    });

    // 4 ------------------------------------------------------------------
    criterion(4, "quadrature vs closed-form oracles (exp everywhere, psi on K2)", [&] {
        for (const GalleryEntry& e : gallery) {
            const HGammaPlan plan(e.dec, e.full);
            CounterRng rng(4004);
            for (int i = 0; i < 50; ++i) {
                Vec f(e.dec.n());
                for (int k = 0; k < f.size(); ++k) f[k] = rng.normal();
                const LpsResult exact = plan.eval(f);
                const LpsResult quad = h_gamma_F(e.dec, e.full, Symbol::exp_decay(), f, {});
                const double scale = std::max(exact.values.maxCoeff(), 1e-300);
                const double dev = (quad.values - exact.values).cwiseAbs().maxCoeff();
                if (dev > 1e-6 * scale)
                    return e.name + ": sup deviation " + fmt(dev / scale);
                const double n2a = exact.p_norms.at(2.0), n2b = quad.p_norms.at(2.0);
                if (std::fabs(n2a - n2b) > 1e-6 * n2a)
                    return e.name + ": 2-norm deviation";
            }
        }
        // psi on K2 against the Gamma-function closed form
        const GalleryEntry& k2 = gallery[0];
        Vec f(2);
        f << 1.0, -1.0;
        const LpsResult r = h_gamma_F(k2.dec, k2.full, Symbol::psi(0.25), f, {});
        const double want = std::sqrt(std::tgamma(2.5) / std::pow(2.0, 2.5));
        if (std::fabs(r.values[0] - want) > 1e-6 * want)
            return "psi quadrature " + fmt(r.values[0]) + " vs " + fmt(want);
        return std::string();
    });

    // 5 ------------------------------------------------------------------
    criterion(5, "maximal-function chain with measured alpha_p, zero violations", [&] {
        const std::vector<double> ps{1.25, 1.5, 2.0};
        for (const GalleryEntry& e : gallery) {
            const auto corpus = random_corpus(e.dec, 100, 5005, true);
            const auto orbit = orbit_augment(e.dec, corpus);
            std::vector<double> alphas;
            for (double p : ps) {
                const AlphaMeasurement a = measure_alpha_p(e.gen, e.full, p, orbit);
                if (!(a.alpha > 0.0)) return e.name + ": alpha_p not positive";
                alphas.push_back(a.alpha);
            }
            const HGammaPlan plan(e.dec, e.full);
            TimeGrid grid;
            grid.points_per_decade = 40;
            const auto reps =
                verify_hgamma_chain_multi(e.dec, e.full, ps, alphas, corpus, grid, &plan);
            for (const ChainReport& rep : reps)
                if (!rep.pass)
                    return e.name + " p=" + fmt(rep.p) +
                           ": worst margin " + fmt(rep.worst_margin_rel);
        }
        return std::string();
    });

    // 6 ------------------------------------------------------------------
    criterion(6, "multiplicative ratio at p=2 bounded by 1 (spectral Cauchy-Schwarz)", [&] {
        HarnessSearchSpec spec;
        spec.steps = 25;
        spec.seed = 6006;
        for (const GalleryEntry& e : gallery) {
            const auto corpus = random_corpus(e.dec, 30, 6007, false);
            for (double eps : default_eps_grid()) {
                const InequalityReport rep =
                    verify_multiplicative(e.dec, e.full, 2.0, 2.0, 2.0, eps, corpus, spec);
                if (rep.no_admissible_corpus) return e.name + ": no admissible corpus";
                if (!(rep.max_ratio <= 1.0 + 1e-8))
                    return e.name + " eps=" + fmt(eps) + ": max_ratio " + fmt(rep.max_ratio);
            }
        }
        return std::string();
    });

    // 7 ------------------------------------------------------------------
    criterion(7, "p<2 sweeps: finite ratios, scale invariance, matrix route at eps=1/2", [&] {
        const std::vector<double> eps_list{0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
        HarnessSearchSpec spec;
        spec.steps = 40;
        spec.seed = 7007;
        for (const std::string name : {"p16", "p64", "schrodinger_spike", "elliptic_contrast"}) {
            const GalleryEntry* e = nullptr;
            for (const GalleryEntry& g : gallery)
                if (g.name == name) e = &g;
            for (double p : {1.25, 1.5}) {
                const auto corpus = random_corpus(e->dec, 40, 7008, false);
                const auto rows =
                    epsilon_sweep(e->dec, e->full, p, p, p, eps_list, corpus, spec);
                for (const SweepRow& row : rows) {
                    if (!std::isfinite(row.report.max_ratio) || row.report.max_ratio <= 0.0)
                        return name + ": non-finite ratio";
                    const double again = riesz_ratio(e->dec, e->full, 3.0 * row.report.witness,
                                                     p, p, p, row.param);
                    if (std::fabs(again - row.report.max_ratio) > 1e-10 * row.report.max_ratio)
                        return name + ": scale invariance violated";
                }
                // eps = 1/2 equals the independent special-case route
                const InequalityReport& half = rows[0].report;
                const double cd = matrix_route_ratio(*e, half.witness, p);
                if (std::fabs(cd - half.max_ratio) > 1e-10 * half.max_ratio)
                    return name + ": matrix-route column " + fmt(cd) + " vs " + fmt(half.max_ratio);
            }
        }
        return std::string();
    });

    // 8 ------------------------------------------------------------------
    criterion(8, "divergence refusal for phi at eps=0 (delta = 1/2)", [&] {
        const GalleryEntry& k2 = gallery[0];
        Vec f(2);
        f << 1.0, -1.0;
        try {
            h_gamma_F(k2.dec, k2.full, Symbol::phi(0.0), f, {});
            return std::string("phi(0) was not refused");
        } catch (const DivergenceError&) {
        }
        try {
            h_gamma_F(k2.dec, k2.full, Symbol::phi(0.05), f, {});
        } catch (const DivergenceError&) {
            return std::string("phi(0.05) was wrongly refused");
        }
        return std::string();
    });

    // 9 ------------------------------------------------------------------
    criterion(9, "R-bound machinery: MC vs exact, m=1 norm, p=2 modal oracle", [&] {
        const GalleryEntry* p16 = &gallery[1];
        // exact enumeration vs Monte Carlo, m = 8, 1e5 samples, 20 configs
        CounterRng rng(9009);
        const OperatorFamily fam = OperatorFamily::semigroup_family(p16->dec, p16->full);
        for (int cfg = 0; cfg < 20; ++cfg) {
            const double p = (cfg % 3 == 0) ? 2.0 : (cfg % 3 == 1 ? 1.5 : 1.25);
            std::vector<std::vector<double>> fields;
            for (int k = 0; k < 8; ++k) {
                Vec f(p16->dec.n());
                for (int j = 0; j < f.size(); ++j) f[j] = rng.normal();
                fields.push_back(fam.apply(rng.log_uniform(1e-2, 1e2), f));
            }
            FieldNorm norm{&*&p16->full, &p16->dec.mu, p};
            const auto exact = rademacher_norm(fields, norm, RademacherMode::Exact);
            const auto mc =
                rademacher_norm(fields, norm, RademacherMode::MonteCarlo, 100000, 90 + cfg);
            if (std::fabs(mc.value - exact.value) > 0.02 * exact.value)
                return "config " + fmt(cfg) + ": MC " + fmt(mc.value) + " vs exact " +
                       fmt(exact.value);
        }
        // m=1 estimate equals the operator-norm estimate
        RboundSearchSpec search;
        search.restarts = 8;
        search.steps = 60;
        search.seed = 9010;
        const RboundEstimate m1 = estimate_rbound(fam, 2.0, 1, search);
        const RboundEstimate opnorm = estimate_rbound(fam, 2.0, 1, search);
        if (std::fabs(m1.value - opnorm.value) > 1e-9 * m1.value)
            return std::string("m=1 vs operator-norm estimate mismatch");
        // p=2 semigroup family against sup_z sqrt(z e^{-2z}) on K2 and P16
        const double oracle = std::sqrt(0.5 / M_E);
        for (int gi : {0, 1}) {
            const GalleryEntry& e = gallery[gi];
            const OperatorFamily f2 = OperatorFamily::semigroup_family(e.dec, e.full);
            const RboundEstimate est = estimate_rbound(f2, 2.0, 2, search);
            if (std::fabs(est.value - oracle) > 1e-6 * oracle)
                return e.name + ": estimate " + fmt(est.value) + " vs oracle " + fmt(oracle);
        }
        return std::string();
    });

    // 10 -----------------------------------------------------------------
    criterion(10, "semigroup vs resolvent family estimates within a factor of 10", [&] {
        for (const GalleryEntry& e : gallery) {
            const bool large = e.dec.n() > 100;
            for (std::uint64_t seed : {11ull, 12ull}) {
                RboundSearchSpec search;
                search.restarts = large ? 4 : 6;
                search.steps = large ? 25 : 40;
                search.seed = seed;
                const FamilyComparison cmp =
                    compare_families(e.dec, e.full, 1.5, 1.0, 4, search);
                if (!std::isfinite(cmp.semigroup.value) || !std::isfinite(cmp.resolvent.value))
                    return e.name + ": non-finite estimate";
                if (cmp.semigroup.value <= 0 || cmp.resolvent.value <= 0)
                    return e.name + ": zero estimate";
                const double ratio = cmp.semigroup.value / cmp.resolvent.value;
                if (ratio > 10.0 || ratio < 0.1)
                    return e.name + " seed=" + fmt(seed) + ": ratio " + fmt(ratio);
            }
        }
        return std::string();
    });

    // 11 -----------------------------------------------------------------
    criterion(11, "gradient bound: c_1 = 1 on K2; finite fits; p>2 run completes", [&] {
        const GalleryEntry& k2 = gallery[0];
        Vec f(2);
        f << 1.0, -1.0;
        const GradientBoundFit k2fit = fit_gradient_bound(k2.dec, k2.full, 1.0, {f});
        if (std::fabs(k2fit.c_theta - 1.0) > 1e-9)
            return "K2 c_1 = " + fmt(k2fit.c_theta);

        TimeGrid grid;
        grid.points_per_decade = 20;
        bool p16_ok = false;
        for (const GalleryEntry& e : gallery) {
            const auto corpus = random_corpus(e.dec, 20, 11011, false);
            const GradientBoundFit fit =
                fit_gradient_bound(e.dec, e.full, 1.0, corpus, grid);
            if (!std::isfinite(fit.c_theta)) return e.name + ": non-finite c_theta";
            if (e.name == "p16" && !fit.growing_in_t) p16_ok = true;
        }
        if (p16_ok) {
            // reported extension: the same ratio machinery at p = p0 = p1 > 2
            const GalleryEntry& e = gallery[1];
            HarnessSearchSpec spec;
            spec.steps = 30;
            spec.seed = 11012;
            const auto corpus = random_corpus(e.dec, 30, 11013, false);
            const InequalityReport rep =
                verify_multiplicative(e.dec, e.full, 2.5, 2.5, 2.5, 0.25, corpus, spec);
            if (!std::isfinite(rep.max_ratio) || rep.max_ratio <= 0.0)
                return std::string("p=2.5 extension did not complete finitely");
        }
        return std::string();
    });

    // 12 -----------------------------------------------------------------
    criterion(12, "smoothing operator norm matches the p=2 modal oracle; alpha range", [&] {
        HarnessSearchSpec spec;
        spec.steps = 40;
        spec.seed = 12012;
        for (const std::string name : {"k2", "p16", "grid16x16", "schrodinger_spike"}) {
            const GalleryEntry* e = nullptr;
            for (const GalleryEntry& g : gallery)
                if (g.name == name) e = &g;
            for (double alpha : {0.0, 0.25}) {
                double oracle = 0.0;
                for (int k = e->dec.kernel_dim; k < e->dec.n(); ++k)
                    oracle = std::max(oracle, std::pow(e->dec.lambdas[k], 0.5 - alpha) *
                                                  std::exp(-e->dec.lambdas[k]));
                const OpNormEstimate est =
                    gamma_smoothing_opnorm(e->dec, e->full, alpha, 2.0, spec);
                if (std::fabs(est.value - oracle) > 1e-6 * oracle)
                    return name + " alpha=" + fmt(alpha) + ": " + fmt(est.value) + " vs " +
                           fmt(oracle);
            }
        }
        try {
            gamma_smoothing_opnorm(gallery[0].dec, gallery[0].full, 0.5, 2.0, spec);
            return std::string("alpha = 1/2 was not rejected");
        } catch (const ValidationError&) {
        }
        return std::string();
    });

    // 13 -----------------------------------------------------------------
    criterion(13, "byte-identical reruns and witness re-verification", [&] {
        const fs::path base = fs::temp_directory_path() / "lps_acceptance";
        fs::remove_all(base);
        fs::create_directories(base);
        const std::string cfg_path = (base / "cfg.json").string();
        {
            std::ofstream out(cfg_path);
            out << Json{{"model", kGallery + "/p16.json"},
                        {"p", 1.5},
                        {"eps", 0.25},
                        {"corpus", Json{{"count", 40}}},
                        {"search", Json{{"steps", 25}}},
                        {"seed", 99}}
                       .dump(2);
        }
        for (const char* dir : {"a", "b"}) {
            CliInvocation inv;
            inv.command = "verify-31";
            inv.config_path = cfg_path;
            inv.out_dir = (base / dir).string();
            if (run_invocation(inv) != kOk) return std::string("verify-31 run failed");
        }
        if (read_file((base / "a" / "verify-31-report.json").string()) !=
            read_file((base / "b" / "verify-31-report.json").string()))
            return std::string("reports differ between identical runs");

        CliInvocation rv;
        rv.reverify_path = (base / "a" / "verify-31-witness.json").string();
        rv.out_dir = (base / "a").string();
        if (run_invocation(rv) != kOk) return std::string("witness failed re-verification");

        // sweep determinism incl. CSV bytes
        const std::string sweep_cfg = (base / "sweep.json").string();
        {
            std::ofstream out(sweep_cfg);
            out << Json{{"model", kGallery + "/k2.json"},
                        {"p", 1.5},
                        {"eps_list", Json::array({0.5, 0.1})},
                        {"corpus", Json{{"count", 10}}},
                        {"seed", 5}}
                       .dump(2);
        }
        for (const char* dir : {"sa", "sb"}) {
            CliInvocation inv;
            inv.command = "sweep-eps";
            inv.config_path = sweep_cfg;
            inv.out_dir = (base / dir).string();
            if (run_invocation(inv) != kOk) return std::string("sweep run failed");
        }
        if (read_file((base / "sa" / "sweep-eps-table.csv").string()) !=
            read_file((base / "sb" / "sweep-eps-table.csv").string()))
            return std::string("sweep tables differ between identical runs");
        fs::remove_all(base);
        return std::string();
    });

    std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAILURE" : "SUCCESS", g_failures);
    return g_failures;
}
